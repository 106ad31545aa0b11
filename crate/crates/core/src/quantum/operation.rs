use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{QautError, Result};
use crate::linalg::{Complex, ComplexMatrix};
use crate::quantum::state::DensityOperator;

/// Default floor below which an outcome is treated as impossible.
pub const DEFAULT_PROB_FLOOR: f64 = 1e-12;

/// Label used for the single outcome of a unitary operation.
pub const UNITARY_OUTCOME: &str = "·";

/// Finite, ordered set of outcome labels. The order fixes the basis of
/// `l²(X)` and with it the block layout of isometries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeSet {
    labels: Vec<String>,
}

impl OutcomeSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(QautError::InvalidOutcomes("outcome set is empty".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(QautError::InvalidOutcomes(format!("duplicate label `{l}`")));
            }
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| QautError::UnknownOutcome(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }
}

/// `J(x)`: the embedding `|ψ⟩ ↦ |ψ⟩ ⊗ |x⟩` as a `(dim·|X|) × dim` matrix.
///
/// Rows are laid out outcome-major: the identity block for `x` starts at row
/// `index(x) * dim`.
pub fn embed_outcome(dim: usize, outcomes: &OutcomeSet, x: &str) -> Result<ComplexMatrix> {
    let idx = outcomes.index_of(x)?;
    let mut j = ComplexMatrix::zeros(dim * outcomes.len(), dim);
    j.set_block(idx * dim, 0, &ComplexMatrix::identity(dim));
    Ok(j)
}

/// Outcome-indexed family of square operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausFamily {
    dim: usize,
    outcomes: OutcomeSet,
    blocks: Vec<ComplexMatrix>,
}

impl KrausFamily {
    /// Builds a family and checks completeness, `‖Σ K*K − I‖_max ≤ tol`.
    pub fn new(outcomes: OutcomeSet, blocks: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let family = Self::unchecked(outcomes, blocks)?;
        let deviation = family.completeness_deviation();
        if deviation > tol {
            return Err(QautError::CompletenessViolated { deviation });
        }
        Ok(family)
    }

    /// Shape-checked construction without the completeness test.
    pub fn unchecked(outcomes: OutcomeSet, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        if blocks.len() != outcomes.len() {
            return Err(QautError::DimensionMismatch(format!(
                "{} blocks for {} outcomes",
                blocks.len(),
                outcomes.len()
            )));
        }
        let dim = blocks[0].rows();
        for b in &blocks {
            if b.shape() != (dim, dim) {
                return Err(QautError::DimensionMismatch(format!(
                    "Kraus block is {}x{}, expected {dim}x{dim}",
                    b.rows(),
                    b.cols()
                )));
            }
        }
        Ok(Self { dim, outcomes, blocks })
    }

    pub fn from_pairs<S: Into<String>>(pairs: Vec<(S, ComplexMatrix)>, tol: f64) -> Result<Self> {
        let (labels, blocks): (Vec<String>, Vec<ComplexMatrix>) =
            pairs.into_iter().map(|(l, m)| (l.into(), m)).unzip();
        Self::new(OutcomeSet::new(labels)?, blocks, tol)
    }

    /// `max |Σ_x K(x)*K(x) − I|`.
    pub fn completeness_deviation(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.blocks {
            sum = &sum + &(&k.adjoint() * k);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim)).expect("same shape")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &OutcomeSet {
        &self.outcomes
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, x: &str) -> Result<&ComplexMatrix> {
        Ok(&self.blocks[self.outcomes.index_of(x)?])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ComplexMatrix)> {
        self.outcomes.labels().iter().map(String::as_str).zip(&self.blocks)
    }
}

/// Isometry `W: H_n → H_n ⊗ l²(X)` in outcome-major row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryMatrix {
    dim: usize,
    outcomes: OutcomeSet,
    matrix: ComplexMatrix,
}

impl IsometryMatrix {
    pub fn new(outcomes: OutcomeSet, matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let dim = matrix.cols();
        if matrix.rows() != dim * outcomes.len() {
            return Err(QautError::DimensionMismatch(format!(
                "isometry has {} rows, expected {} for {} outcomes",
                matrix.rows(),
                dim * outcomes.len(),
                outcomes.len()
            )));
        }
        let deviation = (&matrix.adjoint() * &matrix)
            .max_abs_diff(&ComplexMatrix::identity(dim))
            .expect("square");
        if deviation > tol {
            return Err(QautError::NotIsometry { deviation });
        }
        Ok(Self { dim, outcomes, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &OutcomeSet {
        &self.outcomes
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Stacks the Kraus blocks into `W_K`, so that `W_K|ψ⟩ = Σ_x K(x)|ψ⟩ ⊗ |x⟩`.
pub fn kraus_to_isometry(k: &KrausFamily) -> IsometryMatrix {
    let matrix = ComplexMatrix::vstack(&k.blocks).expect("blocks share a width");
    IsometryMatrix {
        dim: k.dim,
        outcomes: k.outcomes.clone(),
        matrix,
    }
}

/// Recovers `K(x) = J(x)* W` by slicing the outcome blocks out of `W`.
pub fn isometry_to_kraus(w: &IsometryMatrix) -> KrausFamily {
    let dim = w.dim;
    let blocks = (0..w.outcomes.len())
        .map(|i| w.matrix.block(i * dim, 0, dim, dim))
        .collect();
    KrausFamily {
        dim,
        outcomes: w.outcomes.clone(),
        blocks,
    }
}

/// A quantum operation, stored as one representative Kraus family of its
/// phase-equivalence class.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumOperation {
    kraus: KrausFamily,
}

impl QuantumOperation {
    pub fn new(kraus: KrausFamily) -> Self {
        Self { kraus }
    }

    pub fn from_isometry(w: &IsometryMatrix) -> Self {
        Self::new(isometry_to_kraus(w))
    }

    /// Single-outcome operation for a unitary `u`.
    pub fn unitary(u: ComplexMatrix, tol: f64) -> Result<Self> {
        Self::unitary_labelled(u, UNITARY_OUTCOME, tol)
    }

    pub fn unitary_labelled(u: ComplexMatrix, label: &str, tol: f64) -> Result<Self> {
        if !u.is_square() {
            return Err(QautError::NotSquare {
                rows: u.rows(),
                cols: u.cols(),
            });
        }
        let deviation = (&u.adjoint() * &u)
            .max_abs_diff(&ComplexMatrix::identity(u.rows()))
            .expect("square");
        if deviation > tol {
            return Err(QautError::NotUnitary { deviation });
        }
        Ok(Self::new(KrausFamily::unchecked(
            OutcomeSet::new([label])?,
            vec![u],
        )?))
    }

    pub fn kraus(&self) -> &KrausFamily {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus.dim
    }

    pub fn outcomes(&self) -> &OutcomeSet {
        &self.kraus.outcomes
    }

    pub fn isometry(&self) -> IsometryMatrix {
        kraus_to_isometry(&self.kraus)
    }

    fn check_dim(&self, rho: &DensityOperator) -> Result<()> {
        if rho.dim() != self.dim() {
            return Err(QautError::DimensionMismatch(format!(
                "operation acts on dimension {}, state has dimension {}",
                self.dim(),
                rho.dim()
            )));
        }
        Ok(())
    }

    /// `Pr(x|ρ) = tr(ρ K(x)*K(x))`, clamped into `[0, 1]`.
    pub fn probability(&self, x: &str, rho: &DensityOperator, tol: f64) -> Result<f64> {
        self.check_dim(rho)?;
        let k = self.kraus.block(x)?;
        clamp_probability(raw_probability(k, rho), tol)
    }

    /// The same probability through the isometry:
    /// `tr(ρ W*(1 ⊗ |x⟩⟨x|) W)`.
    pub fn probability_via_isometry(&self, x: &str, rho: &DensityOperator, tol: f64) -> Result<f64> {
        self.check_dim(rho)?;
        let w = self.isometry();
        let j = embed_outcome(self.dim(), self.outcomes(), x)?;
        let projector = &j * &j.adjoint();
        let m = &(&(rho.matrix() * &w.matrix.adjoint()) * &projector) * &w.matrix;
        clamp_probability(m.trace()?.re, tol)
    }

    /// Normalized post-measurement state `K(x)ρK(x)* / Pr(x|ρ)`.
    pub fn effect(&self, x: &str, rho: &DensityOperator, prob_floor: f64) -> Result<DensityOperator> {
        self.check_dim(rho)?;
        let k = self.kraus.block(x)?;
        let p = raw_probability(k, rho);
        if p <= prob_floor {
            return Err(QautError::ZeroProbabilityOutcome {
                outcome: x.to_string(),
                probability: p,
            });
        }
        Ok(effect_unchecked(k, rho, p))
    }

    /// Probabilities of every outcome, in outcome order.
    pub fn distribution(&self, rho: &DensityOperator, tol: f64) -> Result<Vec<(String, f64)>> {
        self.check_dim(rho)?;
        self.kraus
            .iter()
            .map(|(x, k)| Ok((x.to_string(), clamp_probability(raw_probability(k, rho), tol)?)))
            .collect()
    }
}

pub(crate) fn raw_probability(k: &ComplexMatrix, rho: &DensityOperator) -> f64 {
    // tr(ρ K*K) = tr(K ρ K*) = Σ_ij (KρK*)_ii
    let krk = &(k * rho.matrix()) * &k.adjoint();
    krk.trace().expect("square").re
}

pub(crate) fn effect_unchecked(k: &ComplexMatrix, rho: &DensityOperator, p: f64) -> DensityOperator {
    let m = (&(k * rho.matrix()) * &k.adjoint()).scale_real(1.0 / p);
    DensityOperator::from_trusted(hermitize(m))
}

/// Removes the anti-Hermitian rounding residue.
fn hermitize(mut m: ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    for i in 0..n {
        m[(i, i)] = Complex::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    m
}

/// Snaps drift into `[0, 1]`; anything further out than `tol` is an error.
pub fn clamp_probability(p: f64, tol: f64) -> Result<f64> {
    if !(-tol..=1.0 + tol).contains(&p) {
        return Err(QautError::ProbabilityOutOfRange(p));
    }
    Ok(p.clamp(0.0, 1.0))
}

pub fn outcome_probability(op: &QuantumOperation, x: &str, rho: &DensityOperator) -> Result<f64> {
    op.probability(x, rho, crate::linalg::DEFAULT_TOL)
}

pub fn apply_effect(
    op: &QuantumOperation,
    x: &str,
    rho: &DensityOperator,
    prob_floor: f64,
) -> Result<DensityOperator> {
    op.effect(x, rho, prob_floor)
}

pub fn outcome_distribution(op: &QuantumOperation, rho: &DensityOperator) -> Result<BTreeMap<String, f64>> {
    Ok(op
        .distribution(rho, crate::linalg::DEFAULT_TOL)?
        .into_iter()
        .collect())
}

pub fn unitary_as_operation(u: ComplexMatrix, tol: f64) -> Result<QuantumOperation> {
    QuantumOperation::unitary(u, tol)
}

/// Outcome of a phase-equivalence check.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseVerdict {
    /// `K_b(x) = e^{iθ(x)} K_a(x)` for every outcome; phases in `[0, 2π)`.
    Equivalent(Vec<(String, f64)>),
    /// No phase works for this outcome.
    NotEquivalent { outcome: String, deviation: f64 },
}

/// Decides whether two operations differ only by outcome-wise phases.
///
/// The phase for `x` is read off the largest-modulus entry of `K_a(x)`;
/// an all-zero block gets `θ = 0` and requires `K_b(x)` to vanish as well.
pub fn phase_equivalence(a: &QuantumOperation, b: &QuantumOperation, tol: f64) -> Result<PhaseVerdict> {
    if a.dim() != b.dim() {
        return Err(QautError::DimensionMismatch(format!(
            "operations act on dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    if a.outcomes() != b.outcomes() {
        return Err(QautError::InvalidOutcomes(format!(
            "outcome sets differ: {:?} vs {:?}",
            a.outcomes().labels(),
            b.outcomes().labels()
        )));
    }
    let mut phases = Vec::with_capacity(a.outcomes().len());
    for ((x, ka), kb) in a.kraus.iter().zip(b.kraus.blocks()) {
        let (pivot, modulus) = ka
            .entries()
            .iter()
            .enumerate()
            .map(|(i, z)| (i, z.norm()))
            .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let theta = if modulus <= tol {
            0.0
        } else {
            let ratio = kb.entries()[pivot] / ka.entries()[pivot];
            ratio.arg().rem_euclid(TAU)
        };
        let rotated = ka.scale(Complex::from_polar(1.0, theta));
        let deviation = kb.max_abs_diff(&rotated)?;
        if deviation > tol {
            return Ok(PhaseVerdict::NotEquivalent {
                outcome: x.to_string(),
                deviation,
            });
        }
        // rem_euclid can return TAU itself for tiny negative inputs.
        phases.push((x.to_string(), if theta >= TAU { 0.0 } else { theta }));
    }
    Ok(PhaseVerdict::Equivalent(phases))
}

pub fn phase_equivalent(
    a: &QuantumOperation,
    b: &QuantumOperation,
    tol: f64,
) -> Result<Option<BTreeMap<String, f64>>> {
    Ok(match phase_equivalence(a, b, tol)? {
        PhaseVerdict::Equivalent(phases) => Some(phases.into_iter().collect()),
        PhaseVerdict::NotEquivalent { .. } => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    const TOL: f64 = 1e-9;

    fn basis_measurement() -> QuantumOperation {
        let k0 = ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let k1 = ComplexMatrix::from_real(&[&[0.0, 0.0], &[0.0, 1.0]]);
        QuantumOperation::new(KrausFamily::from_pairs(vec![("0", k0), ("1", k1)], TOL).unwrap())
    }

    fn hadamard_measurement() -> QuantumOperation {
        let k0 = ComplexMatrix::from_real(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let k1 = ComplexMatrix::from_real(&[&[0.5, -0.5], &[-0.5, 0.5]]);
        QuantumOperation::new(KrausFamily::from_pairs(vec![("0", k0), ("1", k1)], TOL).unwrap())
    }

    fn hadamard() -> ComplexMatrix {
        ComplexMatrix::from_real(&[&[FRAC_1_SQRT_2, FRAC_1_SQRT_2], &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]])
    }

    fn plus_state() -> DensityOperator {
        DensityOperator::pure(&ComplexMatrix::from_real(&[&[FRAC_1_SQRT_2], &[FRAC_1_SQRT_2]]), TOL).unwrap()
    }

    #[test]
    fn outcome_set_rejects_duplicates_and_empty() {
        assert!(OutcomeSet::new(["a", "b", "a"]).is_err());
        assert!(OutcomeSet::new(Vec::<String>::new()).is_err());
        let x = OutcomeSet::new(["a", "b"]).unwrap();
        assert_eq!(x.index_of("b").unwrap(), 1);
        assert_eq!(x.index_of("z").unwrap_err(), QautError::UnknownOutcome("z".into()));
    }

    #[test]
    fn embed_outcome_cases() {
        let single = OutcomeSet::new(["a"]).unwrap();
        assert_eq!(embed_outcome(1, &single, "a").unwrap(), ComplexMatrix::identity(1));

        // J(1)|k⟩ = |k⟩ ⊗ |1⟩ sits at row 2 + k in the outcome-major layout.
        let bits = OutcomeSet::new(["0", "1"]).unwrap();
        let j = embed_outcome(2, &bits, "1").unwrap();
        let mut expected = ComplexMatrix::zeros(4, 2);
        expected[(2, 0)] = Complex::new(1.0, 0.0);
        expected[(3, 1)] = Complex::new(1.0, 0.0);
        assert_eq!(j, expected);

        assert!(matches!(embed_outcome(2, &bits, "2"), Err(QautError::UnknownOutcome(_))));
    }

    #[test]
    fn embeddings_are_orthogonal() {
        let xs = OutcomeSet::new(["a", "b", "c"]).unwrap();
        for x in xs.labels() {
            for y in xs.labels() {
                let jx = embed_outcome(3, &xs, x).unwrap();
                let jy = embed_outcome(3, &xs, y).unwrap();
                let prod = &jx.adjoint() * &jy;
                let expected = if x == y {
                    ComplexMatrix::identity(3)
                } else {
                    ComplexMatrix::zeros(3, 3)
                };
                assert_eq!(prod, expected);
            }
        }
    }

    #[test]
    fn kraus_to_isometry_cases() {
        let id = KrausFamily::from_pairs(vec![("u", ComplexMatrix::identity(2))], TOL).unwrap();
        assert_eq!(kraus_to_isometry(&id).matrix(), &ComplexMatrix::identity(2));

        let w = basis_measurement().isometry();
        let mut expected = ComplexMatrix::zeros(4, 2);
        expected[(0, 0)] = Complex::new(1.0, 0.0);
        expected[(3, 1)] = Complex::new(1.0, 0.0);
        assert_eq!(w.matrix(), &expected);

        let back = isometry_to_kraus(&w);
        assert_eq!(&back, basis_measurement().kraus());
    }

    #[test]
    fn isometry_rejects_non_isometric() {
        let xs = OutcomeSet::new(["a"]).unwrap();
        let m = ComplexMatrix::from_real(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(IsometryMatrix::new(xs, m, TOL), Err(QautError::NotIsometry { .. })));
    }

    #[test]
    fn completeness_violation_is_reported() {
        let k = ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let err = KrausFamily::from_pairs(vec![("a", k.clone()), ("b", k)], TOL).unwrap_err();
        assert_eq!(err, QautError::CompletenessViolated { deviation: 1.0 });
    }

    #[test]
    fn random_families_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let k = random::random_kraus_family(&mut rng, 2, 3);
            let w = kraus_to_isometry(&k);
            let gram = &w.matrix().adjoint() * w.matrix();
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(2)).unwrap() < 1e-9);
            assert_eq!(isometry_to_kraus(&w), k);
        }
    }

    #[test]
    fn probabilities_for_basis_measurement() {
        let m = basis_measurement();
        let mixed = DensityOperator::maximally_mixed(2);
        assert_eq!(outcome_probability(&m, "0", &mixed).unwrap(), 0.5);
        assert_eq!(outcome_probability(&m, "1", &mixed).unwrap(), 0.5);

        let zero = DensityOperator::basis(2, 0);
        assert_eq!(outcome_probability(&m, "0", &zero).unwrap(), 1.0);
        assert_eq!(outcome_probability(&m, "1", &zero).unwrap(), 0.0);

        let p = outcome_probability(&m, "0", &plus_state()).unwrap();
        assert!((p - 0.5).abs() < 1e-15);

        assert!(matches!(
            outcome_probability(&m, "x", &zero),
            Err(QautError::UnknownOutcome(_))
        ));
        assert!(matches!(
            outcome_probability(&m, "0", &DensityOperator::basis(3, 0)),
            Err(QautError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn born_rule_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let op = QuantumOperation::new(random::random_kraus_family(&mut rng, 3, 3));
            let rho = random::random_density(&mut rng, 3);
            for x in op.outcomes().labels() {
                let a = op.probability(x, &rho, TOL).unwrap();
                let b = op.probability_via_isometry(x, &rho, TOL).unwrap();
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn effect_cases() {
        let m = basis_measurement();
        let post = apply_effect(&m, "0", &plus_state(), DEFAULT_PROB_FLOOR).unwrap();
        assert!(post.max_abs_diff(&DensityOperator::basis(2, 0)).unwrap() < 1e-15);

        let x = unitary_as_operation(ComplexMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]), TOL).unwrap();
        let post = apply_effect(&x, UNITARY_OUTCOME, &DensityOperator::basis(2, 0), DEFAULT_PROB_FLOOR).unwrap();
        assert_eq!(post, DensityOperator::basis(2, 1));

        let err = apply_effect(&m, "1", &DensityOperator::basis(2, 0), DEFAULT_PROB_FLOOR).unwrap_err();
        assert!(matches!(err, QautError::ZeroProbabilityOutcome { .. }));
    }

    #[test]
    fn effects_are_valid_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let op = QuantumOperation::new(random::random_kraus_family(&mut rng, 4, 3));
            let rho = random::random_density(&mut rng, 4);
            for x in op.outcomes().labels() {
                if op.probability(x, &rho, TOL).unwrap() > 1e-12 {
                    let post = op.effect(x, &rho, DEFAULT_PROB_FLOOR).unwrap();
                    DensityOperator::new(post.into_matrix(), 1e-9).unwrap();
                }
            }
        }
    }

    #[test]
    fn distribution_cases() {
        let d = outcome_distribution(&basis_measurement(), &DensityOperator::maximally_mixed(2)).unwrap();
        assert_eq!(d.get("0"), Some(&0.5));
        assert_eq!(d.get("1"), Some(&0.5));

        let h = unitary_as_operation(hadamard(), TOL).unwrap();
        let d = outcome_distribution(&h, &DensityOperator::basis(2, 0)).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d[UNITARY_OUTCOME] - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..20 {
            let op = QuantumOperation::new(random::random_kraus_family(&mut rng, 3, 4));
            let rho = random::random_density(&mut rng, 3);
            let total: f64 = outcome_distribution(&op, &rho).unwrap().values().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unitary_cases() {
        let id = unitary_as_operation(ComplexMatrix::identity(2), TOL).unwrap();
        assert_eq!(id.outcomes().labels(), [UNITARY_OUTCOME]);

        let h = unitary_as_operation(hadamard(), TOL).unwrap();
        let post = h.effect(UNITARY_OUTCOME, &DensityOperator::basis(2, 0), DEFAULT_PROB_FLOOR).unwrap();
        let expected = ComplexMatrix::from_real(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(post.matrix().max_abs_diff(&expected).unwrap() < 1e-15);

        let shear = ComplexMatrix::from_real(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(unitary_as_operation(shear, TOL), Err(QautError::NotUnitary { .. })));
    }

    #[test]
    fn phase_equivalence_cases() {
        let m = basis_measurement();
        let same = phase_equivalent(&m, &m, TOL).unwrap().unwrap();
        assert!(same.values().all(|&t| t == 0.0));

        let phase = Complex::from_polar(1.0, PI / 3.0);
        let k = m.kraus();
        let shifted = KrausFamily::new(
            k.outcomes().clone(),
            vec![k.blocks()[0].scale(phase), k.blocks()[1].clone()],
            TOL,
        )
        .unwrap();
        let thetas = phase_equivalent(&m, &QuantumOperation::new(shifted), TOL).unwrap().unwrap();
        assert!((thetas["0"] - PI / 3.0).abs() < 1e-9);
        assert_eq!(thetas["1"], 0.0);

        assert_eq!(phase_equivalent(&m, &hadamard_measurement(), TOL).unwrap(), None);
        match phase_equivalence(&m, &hadamard_measurement(), TOL).unwrap() {
            PhaseVerdict::NotEquivalent { outcome, .. } => assert_eq!(outcome, "0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn phase_equivalence_rejects_structural_mismatch() {
        let m = basis_measurement();
        let other = QuantumOperation::new(
            KrausFamily::from_pairs(
                vec![
                    ("a", ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0]])),
                    ("b", ComplexMatrix::from_real(&[&[0.0, 0.0], &[0.0, 1.0]])),
                ],
                TOL,
            )
            .unwrap(),
        );
        assert!(phase_equivalence(&m, &other, TOL).is_err());
        let big = unitary_as_operation(ComplexMatrix::identity(3), TOL).unwrap();
        let small = unitary_as_operation(ComplexMatrix::identity(2), TOL).unwrap();
        assert!(phase_equivalence(&big, &small, TOL).is_err());
    }

    #[test]
    fn zero_blocks_get_zero_phase() {
        let k0 = ComplexMatrix::identity(2);
        let k1 = ComplexMatrix::zeros(2, 2);
        let op = QuantumOperation::new(KrausFamily::from_pairs(vec![("a", k0), ("b", k1)], TOL).unwrap());
        let thetas = phase_equivalent(&op, &op, TOL).unwrap().unwrap();
        assert_eq!(thetas["b"], 0.0);
    }
}
