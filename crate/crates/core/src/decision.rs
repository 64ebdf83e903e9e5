/// Per-hypothesis reject flags in the caller's original index order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct DecisionVector(Vec<bool>);

impl DecisionVector {
    pub fn new(decisions: Vec<bool>) -> Self {
        Self(decisions)
    }

    pub fn none(k: usize) -> Self {
        Self(vec![false; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<bool> {
        self.0
    }

    /// Number of rejections.
    pub fn count(&self) -> usize {
        self.0.iter().filter(|d| **d).count()
    }

    /// True if every rejection here is also a rejection in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| !a || *b)
    }

    pub fn as_u8(&self) -> Vec<u8> {
        self.0.iter().map(|&d| d as u8).collect()
    }
}

impl std::ops::Index<usize> for DecisionVector {
    type Output = bool;

    fn index(&self, i: usize) -> &bool {
        &self.0[i]
    }
}

impl From<Vec<bool>> for DecisionVector {
    fn from(v: Vec<bool>) -> Self {
        Self(v)
    }
}

/// A p-value family sorted ascending, with `perm[r]` the original index of
/// the `r`-th smallest value.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedPValues {
    pub sorted: Vec<f64>,
    pub perm: Vec<usize>,
}

impl SortedPValues {
    /// Stable sort, so tied values keep their input order.
    pub fn new(p: &[f64]) -> Self {
        let mut perm: Vec<usize> = (0..p.len()).collect();
        perm.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        let sorted = perm.iter().map(|&i| p[i]).collect();
        Self { sorted, perm }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Scatter flags given in sorted order back to original order.
    pub fn unsort(&self, sorted_flags: &[bool]) -> DecisionVector {
        let mut out = vec![false; self.perm.len()];
        for (r, &i) in self.perm.iter().enumerate() {
            out[i] = sorted_flags[r];
        }
        DecisionVector(out)
    }

    pub fn original(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.sorted.len()];
        for (r, &i) in self.perm.iter().enumerate() {
            out[i] = self.sorted[r];
        }
        out
    }
}
