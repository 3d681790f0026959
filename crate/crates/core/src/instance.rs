//! The affine matrix family `A(c) = A_0 + Σ c_i A_i` together with its target
//! singular values, and the plain-text instance format.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DMatrixView, DVector};

use crate::error::{IsvpError, Result};
use crate::linalg::diag_embed;

/// Default minimum spacing between consecutive targets (and between the
/// smallest target and zero).
pub const DEFAULT_MIN_GAP: f64 = 1e-10;

/// A validated inverse singular value problem.
///
/// The basis is stored column-stacked: column `j` of the `(m·n)×(n+1)` matrix
/// holds `A_j` in column-major order, so `A_j` is a zero-copy view and the
/// whole Jacobian is one GEMM against it.
#[derive(Debug, Clone, PartialEq)]
pub struct IsvpInstance {
    m: usize,
    n: usize,
    stacked: DMatrix<f64>,
    sigma_star: DVector<f64>,
    min_gap: f64,
}

impl IsvpInstance {
    pub fn new(basis: &[DMatrix<f64>], sigma_star: &[f64]) -> Result<Self> {
        Self::with_min_gap(basis, sigma_star, DEFAULT_MIN_GAP)
    }

    pub fn with_min_gap(basis: &[DMatrix<f64>], sigma_star: &[f64], min_gap: f64) -> Result<Self> {
        let first = basis
            .first()
            .ok_or_else(|| IsvpError::DimensionMismatch("empty basis".into()))?;
        if sigma_star.len() + 1 != basis.len() {
            return Err(IsvpError::ArityMismatch {
                expected: basis.len() - 1,
                got: sigma_star.len(),
            });
        }
        let (m, n) = first.shape();
        if n != basis.len() - 1 {
            return Err(IsvpError::DimensionMismatch(format!(
                "{} basis matrices need {} columns each, got {}",
                basis.len(),
                basis.len() - 1,
                n
            )));
        }
        if n == 0 || m < n {
            return Err(IsvpError::DimensionMismatch(format!(
                "need m >= n >= 1, got {m}x{n}"
            )));
        }
        if let Some((j, a)) = basis.iter().enumerate().find(|(_, a)| a.shape() != (m, n)) {
            return Err(IsvpError::DimensionMismatch(format!(
                "A_{j} is {}x{}, expected {m}x{n}",
                a.nrows(),
                a.ncols()
            )));
        }
        if basis.iter().any(|a| a.iter().any(|x| !x.is_finite())) {
            return Err(IsvpError::NonFiniteInput("basis matrix".into()));
        }
        if sigma_star.iter().any(|x| !x.is_finite()) {
            return Err(IsvpError::NonFiniteInput("target singular values".into()));
        }
        if let Some((index, &value)) = sigma_star.iter().enumerate().find(|(_, &s)| s <= 0.0) {
            return Err(IsvpError::NonpositiveSigma { index, value });
        }
        for i in 0..n {
            let next = if i + 1 < n { sigma_star[i + 1] } else { 0.0 };
            if !(sigma_star[i] - next > min_gap) {
                return Err(IsvpError::DuplicateSigma {
                    index: i,
                    next: i + 1,
                    min_gap,
                });
            }
        }

        let mut stacked = DMatrix::zeros(m * n, n + 1);
        for (j, a) in basis.iter().enumerate() {
            stacked.column_mut(j).copy_from_slice(a.as_slice());
        }
        Ok(Self {
            m,
            n,
            stacked,
            sigma_star: DVector::from_column_slice(sigma_star),
            min_gap,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn sigma_star(&self) -> &DVector<f64> {
        &self.sigma_star
    }

    /// `Σ*` embedded as an `m×n` diagonal matrix.
    pub fn sigma_star_matrix(&self) -> DMatrix<f64> {
        diag_embed(self.m, self.n, self.sigma_star.as_slice())
    }

    /// View of `A_j`, `0 ≤ j ≤ n`.
    pub fn basis(&self, j: usize) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(self.stacked.column(j).data.into_slice(), self.m, self.n)
    }

    /// The basis as `(m·n)×(n+1)`, column `j` being `vec(A_j)`.
    pub fn stacked_basis(&self) -> &DMatrix<f64> {
        &self.stacked
    }

    /// `A(c) = A_0 + Σ_{i=1..n} c_i A_i`, accumulated in ascending `i`.
    pub fn evaluate_a(&self, c: &DVector<f64>) -> Result<DMatrix<f64>> {
        if c.len() != self.n {
            return Err(IsvpError::DimensionMismatch(format!(
                "c has length {}, expected {}",
                c.len(),
                self.n
            )));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(IsvpError::NonFiniteInput("coefficient vector".into()));
        }
        let mut acc = self.stacked.column(0).clone_owned();
        for i in 1..=self.n {
            acc.axpy(c[i - 1], &self.stacked.column(i), 1.0);
        }
        Ok(DMatrix::from_vec(self.m, self.n, acc.data.into()))
    }

    /// Serializes to the text format: `m n`, then `n+1` row-major blocks of
    /// `m` lines, then one line of targets. 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.m, self.n);
        for j in 0..=self.n {
            let a = self.basis(j);
            for r in 0..self.m {
                let row: Vec<String> = (0..self.n).map(|c| format!("{:.16e}", a[(r, c)])).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
        let sig: Vec<String> = self.sigma_star.iter().map(|s| format!("{s:.16e}")).collect();
        let _ = writeln!(out, "{}", sig.join(" "));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| IsvpError::Parse("missing header line".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| IsvpError::Parse(format!("header: {e}"))))
            .collect::<Result<_>>()?;
        let [m, n] = dims[..] else {
            return Err(IsvpError::Parse(format!("header must be `m n`, got `{header}`")));
        };
        let mut parse_row = |what: &str, width: usize| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .ok_or_else(|| IsvpError::Parse(format!("unexpected end of input in {what}")))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| IsvpError::Parse(format!("{what}: {e}"))))
                .collect::<Result<_>>()?;
            if row.len() != width {
                return Err(IsvpError::Parse(format!(
                    "{what}: expected {width} values, got {}",
                    row.len()
                )));
            }
            Ok(row)
        };
        let mut basis = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let mut data = Vec::with_capacity(m * n);
            for r in 0..m {
                data.extend(parse_row(&format!("A_{j} row {r}"), n)?);
            }
            basis.push(DMatrix::from_row_slice(m, n, &data));
        }
        let sigma = parse_row("target singular values", n)?;
        Self::new(&basis, &sigma)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Validating constructor; see [`IsvpInstance::new`].
pub fn build_instance(basis: &[DMatrix<f64>], sigma_star: &[f64]) -> Result<IsvpInstance> {
    IsvpInstance::new(basis, sigma_star)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros(m: usize, n: usize, k: usize) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(m, n); k]
    }

    #[test]
    fn accepts_valid_instance() {
        let inst = build_instance(&zeros(3, 1, 2), &[3.0]).unwrap();
        assert_eq!((inst.m(), inst.n()), (3, 1));
        let inst = build_instance(&zeros(3, 2, 3), &[3.0, 1.0]).unwrap();
        assert_eq!(inst.sigma_star_matrix()[(1, 1)], 1.0);
    }

    #[test]
    fn rejects_duplicate_targets() {
        let err = build_instance(&zeros(4, 3, 4), &[2.0, 2.0, 1.0]).unwrap_err();
        assert!(matches!(err, IsvpError::DuplicateSigma { index: 0, .. }));
    }

    #[test]
    fn rejects_nonpositive_target() {
        let err = build_instance(&zeros(4, 3, 4), &[3.0, 2.0, 0.0]).unwrap_err();
        assert!(matches!(err, IsvpError::NonpositiveSigma { index: 2, .. }));
    }

    #[test]
    fn rejects_increasing_or_near_zero_targets() {
        assert!(matches!(
            build_instance(&zeros(3, 2, 3), &[1.0, 2.0]),
            Err(IsvpError::DuplicateSigma { .. })
        ));
        assert!(matches!(
            build_instance(&zeros(3, 2, 3), &[1.0, 1e-12]),
            Err(IsvpError::DuplicateSigma { index: 1, .. })
        ));
    }

    #[test]
    fn rejects_arity_and_shape_errors() {
        assert!(matches!(
            build_instance(&zeros(3, 2, 3), &[2.0]),
            Err(IsvpError::ArityMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(
            build_instance(&zeros(1, 2, 3), &[2.0, 1.0]),
            Err(IsvpError::DimensionMismatch(_))
        ));
        let mut ragged = zeros(3, 2, 3);
        ragged[2] = DMatrix::zeros(4, 2);
        assert!(matches!(
            build_instance(&ragged, &[2.0, 1.0]),
            Err(IsvpError::DimensionMismatch(_))
        ));
        assert!(matches!(build_instance(&[], &[]), Err(IsvpError::DimensionMismatch(_))));
    }

    #[test]
    fn evaluate_small_family() {
        let a0 = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let a1 = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let inst = build_instance(&[a0, a1], &[1.0]).unwrap();
        let a = inst.evaluate_a(&DVector::from_vec(vec![0.0])).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 1, &[1.0, 0.0]));
        let a = inst.evaluate_a(&DVector::from_vec(vec![2.0])).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 1, &[1.0, 2.0]));
        assert!(matches!(
            inst.evaluate_a(&DVector::from_vec(vec![f64::NAN])),
            Err(IsvpError::NonFiniteInput(_))
        ));
        assert!(matches!(
            inst.evaluate_a(&DVector::from_vec(vec![1.0, 2.0])),
            Err(IsvpError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn basis_view_matches_input() {
        let basis: Vec<DMatrix<f64>> = (0..3)
            .map(|k| DMatrix::from_fn(4, 2, |i, j| (k * 100 + i * 10 + j) as f64))
            .collect();
        let inst = build_instance(&basis, &[2.0, 1.0]).unwrap();
        for (j, a) in basis.iter().enumerate() {
            assert_eq!(inst.basis(j).clone_owned(), *a);
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let basis: Vec<DMatrix<f64>> = (0..3)
            .map(|k| DMatrix::from_fn(3, 2, |i, j| ((k + 1) as f64 / 7.0).powi(i as i32 + j as i32 + 1)))
            .collect();
        let inst = build_instance(&basis, &[std::f64::consts::PI, 1.0 / 3.0]).unwrap();
        let back = IsvpInstance::from_text(&inst.to_text()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn text_parse_errors() {
        assert!(matches!(IsvpInstance::from_text(""), Err(IsvpError::Parse(_))));
        assert!(matches!(IsvpInstance::from_text("2 1\n1\n0\n"), Err(IsvpError::Parse(_))));
        assert!(matches!(IsvpInstance::from_text("2 1\n1 3\n"), Err(IsvpError::Parse(_))));
    }
}
