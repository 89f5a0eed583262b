use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KappaError {
    #[error("annotation matrix needs at least one item")]
    NoItems,
    #[error("annotation matrix needs at least two annotators, got {0}")]
    TooFewAnnotators(usize),
    #[error("annotation matrix needs at least two categories, got {0}")]
    TooFewCategories(usize),
    #[error("item {item} has {found} labels, expected {expected}")]
    RaggedRow { item: usize, found: usize, expected: usize },
    #[error("item {item} uses category {category} outside 0..{categories}")]
    UnknownCategory { item: usize, category: usize, categories: usize },
    #[error("degenerate agreement: every label falls in one category, chance agreement is 1")]
    DegenerateAgreement,
    #[error("annotation file: {0}")]
    Read(String),
}

/// N items rated by R annotators into one of K categories.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationMatrix {
    ratings: Vec<Vec<usize>>,
    categories: usize,
    item_ids: Vec<String>,
    category_names: Vec<String>,
}

impl AnnotationMatrix {
    pub fn new(ratings: Vec<Vec<usize>>, categories: usize) -> Result<Self, KappaError> {
        if ratings.is_empty() {
            return Err(KappaError::NoItems);
        }
        let raters = ratings[0].len();
        if raters < 2 {
            return Err(KappaError::TooFewAnnotators(raters));
        }
        if categories < 2 {
            return Err(KappaError::TooFewCategories(categories));
        }
        for (item, row) in ratings.iter().enumerate() {
            if row.len() != raters {
                return Err(KappaError::RaggedRow { item, found: row.len(), expected: raters });
            }
            if let Some(&category) = row.iter().find(|&&c| c >= categories) {
                return Err(KappaError::UnknownCategory { item, category, categories });
            }
        }
        let item_ids = (0..ratings.len()).map(|i| i.to_string()).collect();
        let category_names = (0..categories).map(|c| c.to_string()).collect();
        Ok(Self { ratings, categories, item_ids, category_names })
    }

    /// Build from textual labels; categories are the distinct labels in sorted order.
    pub fn from_labels<S: AsRef<str>>(item_ids: Vec<String>, rows: &[Vec<S>]) -> Result<Self, KappaError> {
        let names: BTreeSet<&str> = rows.iter().flatten().map(|s| s.as_ref()).collect();
        let names: Vec<String> = names.into_iter().map(str::to_owned).collect();
        if names.len() == 1 {
            return Err(KappaError::DegenerateAgreement);
        }
        let ratings = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| names.binary_search_by(|n| n.as_str().cmp(s.as_ref())).expect("collected above"))
                    .collect()
            })
            .collect();
        let mut matrix = Self::new(ratings, names.len())?;
        if item_ids.len() == matrix.ratings.len() {
            matrix.item_ids = item_ids;
        }
        matrix.category_names = names;
        Ok(matrix)
    }

    pub fn items(&self) -> usize {
        self.ratings.len()
    }

    pub fn annotators(&self) -> usize {
        self.ratings[0].len()
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn category_names(&self) -> &[String] {
        &self.category_names
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn ratings(&self) -> &[Vec<usize>] {
        &self.ratings
    }

    /// Per-item category counts n_ij.
    pub fn counts(&self) -> Vec<Vec<usize>> {
        self.ratings
            .iter()
            .map(|row| {
                let mut c = vec![0; self.categories];
                for &r in row {
                    c[r] += 1;
                }
                c
            })
            .collect()
    }
}

/// Fleiss' kappa, `(P̄ - P̄e) / (1 - P̄e)`.
pub fn fleiss_kappa(matrix: &AnnotationMatrix) -> Result<f64, KappaError> {
    let n_items = matrix.items() as f64;
    let raters = matrix.annotators() as f64;
    let counts = matrix.counts();

    let mut category_totals = vec![0.0; matrix.categories()];
    let mut p_bar = 0.0;
    for row in &counts {
        let mut agreeing = 0.0;
        for (j, &c) in row.iter().enumerate() {
            let c = c as f64;
            category_totals[j] += c;
            agreeing += c * (c - 1.0);
        }
        p_bar += agreeing / (raters * (raters - 1.0));
    }
    p_bar /= n_items;

    let total = n_items * raters;
    let p_e: f64 = category_totals.iter().map(|t| (t / total).powi(2)).sum();
    // p_e == 1 exactly iff all mass sits in one category
    if category_totals.iter().filter(|&&t| t > 0.0).count() < 2 {
        return Err(KappaError::DegenerateAgreement);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Read an annotation table: a CSV header row, then one row per item with
/// the item id followed by one label per annotator.
pub fn load_annotations(path: impl AsRef<Path>) -> Result<AnnotationMatrix, KappaError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| KappaError::Read(e.to_string()))?;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| KappaError::Read(e.to_string()))?;
        let mut fields = record.iter();
        let Some(id) = fields.next() else { continue };
        ids.push(id.to_string());
        rows.push(fields.map(str::to_owned).collect::<Vec<_>>());
    }
    AnnotationMatrix::from_labels(ids, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_agreement_is_one() {
        let m = AnnotationMatrix::new(vec![vec![0, 0, 0], vec![1, 1, 1], vec![0, 0, 0]], 2).unwrap();
        assert_eq!(fleiss_kappa(&m).unwrap(), 1.0);
    }

    #[test]
    fn crossed_pair_is_minus_one() {
        // ((A,B),(B,A)): every item splits 1/1 so P_i = 0 and P̄ = 0;
        // p_A = p_B = 1/2 so P̄e = 1/2; kappa = (0 - 1/2) / (1 - 1/2) = -1.
        let m = AnnotationMatrix::from_labels(vec![], &[vec!["A", "B"], vec!["B", "A"]]).unwrap();
        assert_eq!(fleiss_kappa(&m).unwrap(), -1.0);
    }

    #[test]
    fn single_category_is_degenerate() {
        let m = AnnotationMatrix::new(vec![vec![1, 1], vec![1, 1]], 3).unwrap();
        assert_eq!(fleiss_kappa(&m), Err(KappaError::DegenerateAgreement));
        assert_eq!(
            AnnotationMatrix::from_labels(vec![], &[vec!["x", "x"]]).unwrap_err(),
            KappaError::DegenerateAgreement
        );
    }

    #[test]
    fn shape_errors() {
        assert_eq!(AnnotationMatrix::new(vec![], 2).unwrap_err(), KappaError::NoItems);
        assert_eq!(AnnotationMatrix::new(vec![vec![0]], 2).unwrap_err(), KappaError::TooFewAnnotators(1));
        assert_eq!(AnnotationMatrix::new(vec![vec![0, 0]], 1).unwrap_err(), KappaError::TooFewCategories(1));
        assert!(matches!(
            AnnotationMatrix::new(vec![vec![0, 1], vec![0]], 2),
            Err(KappaError::RaggedRow { item: 1, .. })
        ));
        assert!(matches!(
            AnnotationMatrix::new(vec![vec![0, 2]], 2),
            Err(KappaError::UnknownCategory { item: 0, category: 2, .. })
        ));
    }
}
