//! Observation selection `E` as a sorted index list; `E` is never formed.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionIndex {
    num_nodes: usize,
    observed: Vec<usize>,
}

impl SelectionIndex {
    /// Sorts and deduplicates `observed`.
    pub fn new(num_nodes: usize, mut observed: Vec<usize>) -> Result<Self> {
        observed.sort_unstable();
        observed.dedup();
        if let Some(&bad) = observed.iter().find(|&&i| i >= num_nodes) {
            return Err(Error::IndexOutOfRange { index: bad, len: num_nodes });
        }
        Ok(Self { num_nodes, observed })
    }

    pub fn all(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            observed: (0..num_nodes).collect(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.observed
    }

    /// `E x`.
    pub fn gather(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x.len(), self.num_nodes)?;
        Ok(self.observed.iter().map(|&i| x[i]).collect())
    }

    /// `E^T y`.
    pub fn scatter(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check(y.len(), self.observed.len())?;
        let mut out = vec![0.0; self.num_nodes];
        for (&i, &v) in self.observed.iter().zip(y) {
            out[i] = v;
        }
        Ok(out)
    }

    /// Diagonal of `E^T E`.
    pub fn mask(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.num_nodes];
        self.observed.iter().for_each(|&i| m[i] = 1.0);
        m
    }

    fn check(&self, got: usize, want: usize) -> Result<()> {
        if got != want {
            return Err(Error::DimensionMismatch(format!("vector of length {got}, expected {want}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gather_scatter() {
        let s = SelectionIndex::new(4, vec![2, 0, 2]).unwrap();
        assert_eq!(s.indices(), &[0, 2]);
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(s.gather(&x).unwrap(), vec![1.0, 3.0]);
        assert_eq!(s.scatter(&[5.0, 6.0]).unwrap(), vec![5.0, 0.0, 6.0, 0.0]);
        assert_eq!(s.gather(&s.scatter(&[5.0, 6.0]).unwrap()).unwrap(), vec![5.0, 6.0]);
        assert_eq!(SelectionIndex::all(3).gather(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(
            SelectionIndex::new(2, vec![2]).unwrap_err(),
            Error::IndexOutOfRange { index: 2, len: 2 }
        );
    }
}
