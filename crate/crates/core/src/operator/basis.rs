use serde::{Deserialize, Serialize};

use super::{c, expectation, identity, tensor, CMat, C64, I, ONE};
use crate::error::{QrcError, Result};
use crate::operator::DensityMatrix;

/// Built-in basis families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BasisKind {
    /// All Pauli strings on `qubits` qubits.
    Pauli { qubits: usize },
    /// Identity plus the generalized Gell-Mann matrices of a qudit.
    GellMann { dim: usize },
    /// Symmetrized quadrature moments `X^n P^m` with `n + m ≤ degree`
    /// represented on a Fock space truncated to `cutoff` levels.
    FockMoment { cutoff: usize, degree: usize },
}

/// Ordered operator basis with the identity as element 0.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    name: String,
    elements: Vec<CMat>,
    labels: Vec<String>,
    /// Hilbert-Schmidt norms `Tr[B_k† B_k]`.
    norms: Vec<f64>,
    orthogonal: bool,
    complete: bool,
}

/// Expectation values of every basis element, in basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationVector {
    pub values: Vec<C64>,
    pub basis: String,
}

impl ExpectationVector {
    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    // Tr[A† B]
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

impl OperatorBasis {
    const ORTHO_TOL: f64 = 1e-12;

    /// Builds a basis from explicit elements. Element 0 must be the identity.
    pub fn from_elements(name: &str, elements: Vec<CMat>, labels: Vec<String>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| QrcError::UnsupportedBasis("empty basis".into()))?;
        let dim = super::check_square(first, "basis element")?;
        if elements.iter().any(|e| e.shape() != (dim, dim)) {
            return Err(QrcError::DimensionMismatch(
                "basis elements of different shapes".into(),
            ));
        }
        if labels.len() != elements.len() {
            return Err(QrcError::InvalidArgument("one label per element required".into()));
        }
        if (first - identity(dim)).camax() > Self::ORTHO_TOL {
            return Err(QrcError::UnsupportedBasis(format!(
                "element 0 of `{name}` is not the identity"
            )));
        }
        let norms: Vec<f64> = elements.iter().map(|e| hs_inner(e, e).re).collect();
        if norms.iter().any(|&n| n <= 0.0) {
            return Err(QrcError::UnsupportedBasis(format!("`{name}` has a zero element")));
        }
        let mut orthogonal = true;
        'outer: for j in 0..elements.len() {
            for k in j + 1..elements.len() {
                if hs_inner(&elements[j], &elements[k]).norm() > Self::ORTHO_TOL * norms[j].max(norms[k]) {
                    orthogonal = false;
                    break 'outer;
                }
            }
        }
        let complete = elements.len() == dim * dim && (orthogonal || {
            let gram = gram_matrix(&elements);
            let sv = gram.svd(false, false).singular_values;
            let max = sv.iter().copied().fold(0.0, f64::max);
            sv.iter().all(|&s| s > 1e-12 * max)
        });
        Ok(OperatorBasis {
            name: name.to_string(),
            elements,
            labels,
            norms,
            orthogonal,
            complete,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Coefficients `c` with `A = Σ c_m B_m`.
    pub fn expand(&self, a: &CMat) -> Result<Vec<C64>> {
        if !self.complete {
            return Err(QrcError::IncompleteBasis { name: self.name.clone(), dim: self.dim() });
        }
        if a.shape() != (self.dim(), self.dim()) {
            return Err(QrcError::DimensionMismatch(format!(
                "operator {:?} in basis of dimension {}",
                a.shape(),
                self.dim()
            )));
        }
        let overlaps: Vec<C64> = self.elements.iter().map(|b| hs_inner(b, a)).collect();
        if self.orthogonal {
            return Ok(overlaps
                .iter()
                .zip(&self.norms)
                .map(|(o, n)| o / n)
                .collect());
        }
        let gram = gram_matrix(&self.elements);
        let rhs = nalgebra::DVector::from_vec(overlaps);
        let sol = gram
            .lu()
            .solve(&rhs)
            .ok_or(QrcError::IncompleteBasis { name: self.name.clone(), dim: self.dim() })?;
        Ok(sol.iter().copied().collect())
    }

    pub fn reconstruct(&self, coeffs: &[C64]) -> Result<CMat> {
        if coeffs.len() != self.len() {
            return Err(QrcError::DimensionMismatch(format!(
                "{} coefficients for a basis of {} elements",
                coeffs.len(),
                self.len()
            )));
        }
        let d = self.dim();
        Ok(self
            .elements
            .iter()
            .zip(coeffs)
            .fold(CMat::zeros(d, d), |acc, (b, &c)| acc + b * c))
    }

    pub fn expectations_of(&self, rho: &CMat) -> Result<ExpectationVector> {
        let values = self
            .elements
            .iter()
            .map(|b| expectation(rho, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExpectationVector { values, basis: self.name.clone() })
    }

    pub fn expectations(&self, rho: &DensityMatrix) -> Result<ExpectationVector> {
        self.expectations_of(rho.matrix())
    }

    /// New basis whose element `k` is `Σ_j mix[k][j] B_j`. Row 0 must select
    /// the identity so the recombined set is still a valid basis.
    pub fn recombine(&self, mix: &nalgebra::DMatrix<f64>) -> Result<OperatorBasis> {
        if mix.ncols() != self.len() {
            return Err(QrcError::DimensionMismatch("mixing matrix width".into()));
        }
        let d = self.dim();
        let elements: Vec<CMat> = (0..mix.nrows())
            .map(|k| {
                self.elements
                    .iter()
                    .enumerate()
                    .fold(CMat::zeros(d, d), |acc, (j, b)| acc + b * c(mix[(k, j)]))
            })
            .collect();
        let labels = (0..mix.nrows()).map(|k| format!("mix{k}")).collect();
        OperatorBasis::from_elements(&format!("{}-recombined", self.name), elements, labels)
    }
}

fn gram_matrix(elements: &[CMat]) -> CMat {
    let n = elements.len();
    CMat::from_fn(n, n, |i, j| hs_inner(&elements[i], &elements[j]))
}

pub fn make_basis(kind: BasisKind) -> Result<OperatorBasis> {
    match kind {
        BasisKind::Pauli { qubits } => pauli_basis(qubits),
        BasisKind::GellMann { dim } => gell_mann_basis(dim),
        BasisKind::FockMoment { cutoff, degree } => fock_moment_basis(cutoff, degree),
    }
}

fn pauli_basis(qubits: usize) -> Result<OperatorBasis> {
    if qubits == 0 || qubits > 6 {
        return Err(QrcError::UnsupportedBasis(format!(
            "pauli basis for {qubits} qubits (supported: 1..=6)"
        )));
    }
    let singles = super::Pauli::ALL.map(|p| (p.symbol(), p.matrix()));
    let count = 4usize.pow(qubits as u32);
    let mut elements = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for index in 0..count {
        let mut label = String::with_capacity(qubits);
        let mut m = identity(1);
        for q in 0..qubits {
            let digit = (index / 4usize.pow((qubits - 1 - q) as u32)) % 4;
            label.push(singles[digit].0);
            m = tensor(&m, &singles[digit].1);
        }
        elements.push(m);
        labels.push(label);
    }
    OperatorBasis::from_elements(&format!("pauli-{qubits}"), elements, labels)
}

fn gell_mann_basis(dim: usize) -> Result<OperatorBasis> {
    if dim < 2 {
        return Err(QrcError::UnsupportedBasis(format!("gell-mann basis for d = {dim}")));
    }
    let unit = |i: usize, j: usize| {
        let mut m = CMat::zeros(dim, dim);
        m[(i, j)] = ONE;
        m
    };
    let mut elements = vec![identity(dim)];
    let mut labels = vec!["I".to_string()];
    for j in 0..dim {
        for k in j + 1..dim {
            elements.push(unit(j, k) + unit(k, j));
            labels.push(format!("S{j}{k}"));
            elements.push(unit(j, k) * (-I) + unit(k, j) * I);
            labels.push(format!("A{j}{k}"));
        }
    }
    for l in 1..dim {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMat::zeros(dim, dim);
        for j in 0..l {
            m[(j, j)] = c(norm);
        }
        m[(l, l)] = c(-(l as f64) * norm);
        elements.push(m);
        labels.push(format!("D{l}"));
    }
    OperatorBasis::from_elements(&format!("gell-mann-{dim}"), elements, labels)
}

/// Quadratures `X = (a + a†)/√2`, `P = (a − a†)/(i√2)` on a truncated Fock
/// space.
pub fn fock_quadratures(cutoff: usize) -> (CMat, CMat) {
    let mut a = CMat::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a + &ad) * c(s);
    let p = (&a - &ad) * (-I * c(s));
    (x, p)
}

fn symmetrized_product(x: &CMat, p: &CMat, n: usize, m: usize) -> CMat {
    // Average over all distinct orderings of n X factors and m P factors.
    fn words(n: usize, m: usize, prefix: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
        if n == 0 && m == 0 {
            out.push(prefix.clone());
            return;
        }
        if n > 0 {
            prefix.push(true);
            words(n - 1, m, prefix, out);
            prefix.pop();
        }
        if m > 0 {
            prefix.push(false);
            words(n, m - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut all = Vec::new();
    words(n, m, &mut Vec::new(), &mut all);
    let d = x.nrows();
    let total = all.len();
    let sum = all.into_iter().fold(CMat::zeros(d, d), |acc, w| {
        acc + w
            .iter()
            .fold(identity(d), |prod, &is_x| prod * if is_x { x } else { p })
    });
    sum / c(total as f64)
}

fn fock_moment_basis(cutoff: usize, degree: usize) -> Result<OperatorBasis> {
    if cutoff < 2 || degree == 0 || degree > 8 {
        return Err(QrcError::UnsupportedBasis(format!(
            "fock-moment basis with cutoff {cutoff} and degree {degree}"
        )));
    }
    let (x, p) = fock_quadratures(cutoff);
    let mut elements = vec![identity(cutoff)];
    let mut labels = vec!["I".to_string()];
    for k in 1..=degree {
        for n in (0..=k).rev() {
            let m = k - n;
            elements.push(symmetrized_product(&x, &p, n, m));
            labels.push(moment_label(n, m));
        }
    }
    OperatorBasis::from_elements(&format!("fock-moment-{degree}"), elements, labels)
}

fn moment_label(n: usize, m: usize) -> String {
    let part = |sym: &str, k: usize| match k {
        0 => String::new(),
        1 => sym.to_string(),
        _ => format!("{sym}^{k}"),
    };
    if n > 0 && m > 0 {
        format!("{{{}{}}}", part("X", n), part("P", m))
    } else {
        format!("{}{}", part("X", n), part("P", m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::random::{ginibre_matrix, random_hermitian};
    use crate::operator::{hermitian_defect, Pauli, ZERO};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pairwise_orthogonality_defect(b: &OperatorBasis) -> f64 {
        let e = b.elements();
        let mut worst = 0.0f64;
        for j in 0..e.len() {
            for k in 0..e.len() {
                let ip = hs_inner(&e[j], &e[k]);
                let expected = if j == k { b.norms()[j] } else { 0.0 };
                worst = worst.max((ip - c(expected)).norm());
            }
        }
        worst
    }

    #[test]
    fn single_qubit_pauli() {
        let b = make_basis(BasisKind::Pauli { qubits: 1 }).unwrap();
        assert_eq!(b.labels(), &["I", "X", "Y", "Z"]);
        for (e, p) in b.elements().iter().zip(Pauli::ALL) {
            assert_eq!(e, &p.matrix());
        }
        assert!(b.is_complete() && b.is_orthogonal());
    }

    #[test]
    fn two_qubit_pauli_is_orthogonal() {
        let b = make_basis(BasisKind::Pauli { qubits: 2 }).unwrap();
        assert_eq!(b.len(), 16);
        assert!(pairwise_orthogonality_defect(&b) <= 1e-12);
        assert!(b.norms().iter().all(|&n| (n - 4.0).abs() < 1e-15));
        assert_eq!(b.labels()[0], "II");
    }

    #[test]
    fn gell_mann_is_complete_and_orthogonal() {
        for d in 2..=5 {
            let b = make_basis(BasisKind::GellMann { dim: d }).unwrap();
            assert_eq!(b.len(), d * d);
            assert!(pairwise_orthogonality_defect(&b) <= 1e-12);
            for e in &b.elements()[1..] {
                assert!(hermitian_defect(e) == 0.0);
                assert!(crate::operator::trace(e).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn fock_moment_degree_two() {
        let b = make_basis(BasisKind::FockMoment { cutoff: 12, degree: 2 }).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(b.labels(), &["I", "X", "P", "X^2", "{XP}", "P^2"]);
        for e in b.elements() {
            assert!(hermitian_defect(e) < 1e-14);
        }
        let (x, p) = fock_quadratures(12);
        let sym = (&x * &p + &p * &x) * c(0.5);
        assert!((&b.elements()[4] - sym).camax() < 1e-14);
        assert!(!b.is_complete());
        assert!(matches!(
            b.expand(&identity(12)),
            Err(QrcError::IncompleteBasis { .. })
        ));
    }

    #[test]
    fn expand_examples() {
        let b = make_basis(BasisKind::Pauli { qubits: 1 }).unwrap();
        let coeffs = b.expand(&identity(2)).unwrap();
        assert_eq!(coeffs, vec![ONE, ZERO, ZERO, ZERO]);
        let xz = Pauli::X.matrix() + Pauli::Z.matrix();
        let coeffs = b.expand(&xz).unwrap();
        assert_eq!(coeffs, vec![ZERO, ONE, ZERO, ONE]);
    }

    #[test]
    fn rejects_bad_bases() {
        assert!(make_basis(BasisKind::Pauli { qubits: 0 }).is_err());
        assert!(make_basis(BasisKind::GellMann { dim: 1 }).is_err());
        let bad = OperatorBasis::from_elements(
            "bad",
            vec![Pauli::X.matrix()],
            vec!["X".into()],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn non_orthogonal_complete_basis_expands_via_gram() {
        let mix = nalgebra::DMatrix::from_row_slice(
            4,
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.3, 1.0, 0.2, 0.0, 0.0, 0.5, 1.0, 0.0, 0.1, 0.0, 0.4, 1.0],
        );
        let b = make_basis(BasisKind::Pauli { qubits: 1 }).unwrap().recombine(&mix).unwrap();
        assert!(b.is_complete() && !b.is_orthogonal());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = ginibre_matrix(2, 2, &mut rng);
        let rec = b.reconstruct(&b.expand(&a).unwrap()).unwrap();
        assert!((rec - a).camax() < 1e-12);
    }

    #[test]
    fn expectations_transform_linearly_under_recombination() {
        let base = make_basis(BasisKind::Pauli { qubits: 2 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut mix = nalgebra::DMatrix::<f64>::identity(16, 16);
        for i in 1..16 {
            for j in 1..16 {
                mix[(i, j)] += 0.1 * ((i * 7 + j * 3) % 5) as f64 - 0.2;
            }
        }
        let mixed = base.recombine(&mix).unwrap();
        let rho = DensityMatrix::ginibre(&[2, 2], &mut rng);
        let e = base.expectations(&rho).unwrap().real();
        let em = mixed.expectations(&rho).unwrap().real();
        let predicted = &mix * nalgebra::DVector::from_vec(e);
        for k in 0..16 {
            assert!((predicted[k] - em[k]).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn roundtrip_pauli(seed in any::<u64>(), qubits in 1usize..=3) {
            let b = make_basis(BasisKind::Pauli { qubits }).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = random_hermitian(b.dim(), &mut rng);
            let rec = b.reconstruct(&b.expand(&r).unwrap()).unwrap();
            prop_assert!((rec - r).camax() <= 1e-12);
        }

        #[test]
        fn roundtrip_gell_mann(seed in any::<u64>(), dim in 2usize..=6) {
            let b = make_basis(BasisKind::GellMann { dim }).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = ginibre_matrix(dim, dim, &mut rng);
            let rec = b.reconstruct(&b.expand(&r).unwrap()).unwrap();
            prop_assert!((rec - r).camax() <= 1e-12);
        }
    }
}
