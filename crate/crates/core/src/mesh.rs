use serde::{Deserialize, Serialize};

use crate::error::{HenonError, Result};

/// Strictly increasing radii `0 = r_0 < r_1 < ... < r_n = R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(HenonError::InvalidArgument("mesh needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(HenonError::InvalidArgument("mesh must start at r = 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HenonError::InvalidArgument("mesh nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    /// Cosine-graded mesh on `[0, 1]`, clustered at both ends.
    pub fn cosine(points: usize) -> Result<Self> {
        Self::cosine_on(points, 1.0)
    }

    pub fn cosine_on(points: usize, radius: f64) -> Result<Self> {
        if points < 2 {
            return Err(HenonError::InvalidArgument("mesh needs at least two nodes".into()));
        }
        let n = (points - 1) as f64;
        let mut nodes: Vec<f64> = (0..points)
            .map(|i| radius * 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / n).cos()))
            .collect();
        nodes[0] = 0.0;
        nodes[points - 1] = radius;
        Self::from_nodes(nodes)
    }

    pub fn uniform_on(points: usize, radius: f64) -> Result<Self> {
        if points < 2 {
            return Err(HenonError::InvalidArgument("mesh needs at least two nodes".into()));
        }
        let n = (points - 1) as f64;
        let mut nodes: Vec<f64> = (0..points).map(|i| radius * i as f64 / n).collect();
        nodes[points - 1] = radius;
        Self::from_nodes(nodes)
    }

    /// Every cell split in two.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(*self.nodes.last().unwrap());
        Self { nodes }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { nodes: self.nodes.iter().map(|r| r * factor).collect() }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn radius(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_mesh_is_graded() {
        let m = Mesh::cosine(101).unwrap();
        let nodes = m.nodes();
        assert_eq!(nodes[0], 0.0);
        assert_eq!(nodes[100], 1.0);
        assert!(nodes[1] - nodes[0] < nodes[51] - nodes[50]);
        assert!(nodes[100] - nodes[99] < nodes[51] - nodes[50]);
    }

    #[test]
    fn refinement_halves_spacing() {
        let m = Mesh::cosine(11).unwrap();
        let f = m.refined();
        assert_eq!(f.len(), 21);
        assert!((f.max_spacing() - 0.5 * m.max_spacing()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(Mesh::from_nodes(vec![0.0]).is_err());
        assert!(Mesh::from_nodes(vec![0.1, 1.0]).is_err());
        assert!(Mesh::from_nodes(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }
}
