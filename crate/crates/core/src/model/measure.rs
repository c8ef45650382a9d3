use super::ADMISSIBILITY_TOL;

/// Signed atomic measure on the vertices; negative atoms are sources, positive
/// atoms are targets. Stored densely, one entry per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMeasure {
    atoms: Vec<f64>,
}

impl BoundaryMeasure {
    pub fn new(atoms: Vec<f64>) -> Self {
        Self { atoms }
    }

    pub fn zero(num_vertices: usize) -> Self {
        Self {
            atoms: vec![0.0; num_vertices],
        }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn mass(&self, v: usize) -> f64 {
        self.atoms[v]
    }

    /// Negative part at `v` (source mass).
    pub fn source_mass(&self, v: usize) -> f64 {
        (-self.atoms[v]).max(0.0)
    }

    /// Positive part at `v` (target mass).
    pub fn target_mass(&self, v: usize) -> f64 {
        self.atoms[v].max(0.0)
    }

    pub fn sources(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.atoms.len()).filter(|&v| self.atoms[v] < 0.0)
    }

    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.atoms.len()).filter(|&v| self.atoms[v] > 0.0)
    }

    pub fn positive_total(&self) -> f64 {
        self.atoms.iter().filter(|&&m| m > 0.0).sum()
    }

    pub fn negative_total(&self) -> f64 {
        -self.atoms.iter().filter(|&&m| m < 0.0).sum::<f64>()
    }

    /// |nu|(X).
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|m| m.abs()).sum()
    }
}

/// Jordan-part domination: `m+ <= nu+` and `m- <= nu-` at every vertex, up to
/// the admissibility tolerance.
pub fn preceq(m: &[f64], nu: &BoundaryMeasure) -> bool {
    m.len() == nu.atoms.len()
        && m.iter().enumerate().all(|(v, &x)| {
            let (pos, neg) = (x.max(0.0), (-x).max(0.0));
            pos <= nu.target_mass(v) + ADMISSIBILITY_TOL
                && neg <= nu.source_mass(v) + ADMISSIBILITY_TOL
        })
}

/// First vertex where [`preceq`] fails.
pub fn preceq_violation(m: &[f64], nu: &BoundaryMeasure) -> Option<usize> {
    (0..m.len()).find(|&v| {
        let x = m[v];
        x.max(0.0) > nu.target_mass(v) + ADMISSIBILITY_TOL
            || (-x).max(0.0) > nu.source_mass(v) + ADMISSIBILITY_TOL
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nu() -> BoundaryMeasure {
        // a = vertex 0 is the target, b = vertex 1 the source
        BoundaryMeasure::new(vec![1.0, -1.0])
    }

    #[test]
    fn halved_measure_is_dominated() {
        assert!(preceq(&[0.5, -0.5], &nu()));
    }

    #[test]
    fn equality_is_dominated() {
        assert!(preceq(&[1.0, -1.0], &nu()));
    }

    #[test]
    fn sign_mismatch_is_not_dominated() {
        assert!(!preceq(&[-0.5, 0.0], &nu()));
        assert_eq!(preceq_violation(&[-0.5, 0.0], &nu()), Some(0));
    }

    #[test]
    fn totals() {
        let m = BoundaryMeasure::new(vec![0.5, -0.25, 0.0, -0.25]);
        assert_eq!(m.total_variation(), 1.0);
        assert_eq!(m.positive_total(), 0.5);
        assert_eq!(m.negative_total(), 0.5);
        assert_eq!(m.sources().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(m.targets().collect::<Vec<_>>(), vec![0]);
    }
}
