//! Render a handful of tiny raw videos, turn them into feature bundles and
//! round-trip the bundles through the on-disk cache.
//!
//!     cargo run --example ingest_demo

use multipcl::corpus::load_manifest;
use multipcl::ingest::{
    cache_bundle, ingest_entry, load_cached, write_demo_corpus, AutoSource, ColorKeyDetector, EncoderSet,
    IngestOptions,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join(format!("multipcl-ingest-demo-{}", std::process::id()));
    let manifest = write_demo_corpus(&root, 4, 7)?;
    let entries = load_manifest(&manifest)?;
    let encoders = EncoderSet::toy(16, 16, 32, 0);
    let cache = root.join("cache");
    std::fs::create_dir_all(&cache)?;

    for e in &entries {
        let bundle = ingest_entry(
            e,
            &root,
            &AutoSource::default(),
            &ColorKeyDetector::default(),
            &encoders,
            None,
            &IngestOptions::default(),
        )?;
        let faces = bundle.face().map_or(0, |f| f.rows().into_iter().filter(|r| r.iter().any(|&v| v != 0.0)).count());
        let shapes: Vec<String> = bundle.present().map(|m| format!("{m}:{:?}", bundle.get(m).unwrap().dim())).collect();
        println!("{} label={} faces={faces} {}", e.id, e.label.as_f64(), shapes.join(" "));

        let path = cache.join(format!("{}.pclf", e.id));
        cache_bundle(&bundle, &path)?;
        assert_eq!(load_cached(&path)?, bundle);
    }
    println!("cache round trip ok ({})", cache.display());
    std::fs::remove_dir_all(&root)?;
    Ok(())
}
