//! Corpus statistics and inter-annotator agreement for the bundled fixtures.
//!
//!     cargo run --example corpus_stats [manifest.jsonl] [annotations.csv]

use std::path::PathBuf;

use multipcl::corpus::{compute_stats, fleiss_kappa, load_annotations, load_manifest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut args = std::env::args().skip(1);
    let manifest = args.next().map(PathBuf::from).unwrap_or_else(|| fixtures.join("manifest.jsonl"));
    let annotations = args.next().map(PathBuf::from).unwrap_or_else(|| fixtures.join("annotations.csv"));

    let entries = load_manifest(&manifest)?;
    let stats = compute_stats(&entries)?;
    println!("{:<8} {:>6} {:>8} {:>10} {:>9} {:>7}", "class", "videos", "hours", "frames", "mean min", "chars");
    for (name, c) in [("non-PCL", &stats.non_pcl), ("PCL", &stats.pcl), ("total", &stats.total)] {
        println!(
            "{name:<8} {:>6} {:>8.3} {:>10.0} {:>9.2} {:>7.1}",
            c.count, c.duration_hours, c.frames, c.mean_video_minutes, c.mean_transcript_chars
        );
    }
    let s = &stats.spans;
    println!(
        "spans: {} covering {} frames ({:.3} h), {:.2} min per span, {:.2} min per PCL video",
        s.count, s.frames, s.duration_hours, s.mean_span_minutes, s.mean_minutes_per_pcl_video
    );

    let matrix = load_annotations(&annotations)?;
    println!("Fleiss' kappa over {}: {:.4}", annotations.display(), fleiss_kappa(&matrix)?);
    Ok(())
}
