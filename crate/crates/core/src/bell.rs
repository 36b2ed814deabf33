//! Two-qubit states in the Bell basis, the noise channels used to prepare
//! them, and the fidelity and entropy helpers built on top.
//!
//! Bell labels are ordered `Φ+, Ψ−, Ψ+, Φ−` throughout, so a
//! [`BellDiagonal`] `(a, b, c, d)` puts the target-state weight first.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for every equality check on probabilities.
pub const TOL: f64 = 1e-12;
/// Slack allowed on the smallest eigenvalue of a density matrix.
pub const PSD_TOL: f64 = 1e-10;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    PhiPlus,
    PsiMinus,
    PsiPlus,
    PhiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PsiMinus,
        BellLabel::PsiPlus,
        BellLabel::PhiMinus,
    ];

    /// Ket in the computational basis `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub fn ket(self) -> Vector4<Complex64> {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self {
            BellLabel::PhiPlus => Vector4::new(h, C0, C0, h),
            BellLabel::PhiMinus => Vector4::new(h, C0, C0, -h),
            BellLabel::PsiPlus => Vector4::new(C0, h, h, C0),
            BellLabel::PsiMinus => Vector4::new(C0, h, -h, C0),
        }
    }
}

/// Unitary whose columns are the Bell kets in label order.
pub fn bell_basis() -> Matrix4<Complex64> {
    let cols: Vec<Vector4<Complex64>> = BellLabel::ALL.iter().map(|l| l.ket()).collect();
    Matrix4::from_columns(&cols)
}

/// A validated two-qubit density matrix in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitDensity {
    rho: Matrix4<Complex64>,
}

impl TwoQubitDensity {
    pub fn new(rho: Matrix4<Complex64>) -> Result<Self> {
        let state = Self { rho };
        state.validate()?;
        Ok(state)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.rho
    }

    pub fn pure(label: BellLabel) -> Self {
        let k = label.ket();
        Self { rho: k * k.adjoint() }
    }

    pub fn from_bell_diagonal(state: &BellDiagonal) -> Self {
        let basis = bell_basis();
        let diag = Matrix4::from_diagonal(&Vector4::from_iterator(
            state.weights().iter().map(|&w| Complex64::new(w, 0.0)),
        ));
        Self {
            rho: basis * diag * basis.adjoint(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        for r in 0..4 {
            for c in 0..4 {
                if (self.rho[(r, c)] - self.rho[(c, r)].conj()).norm() > TOL {
                    return Err(Error::InvalidParameter(format!(
                        "density matrix is not Hermitian at ({r}, {c})"
                    )));
                }
            }
        }
        let tr = self.rho.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let min_ev = self.min_eigenvalue();
        if min_ev < -PSD_TOL {
            return Err(Error::InvalidParameter(format!(
                "density matrix has negative eigenvalue {min_ev}"
            )));
        }
        Ok(())
    }
}

/// Diagonal weights of a two-qubit state in the Bell basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonal {
    weights: [f64; 4],
}

impl BellDiagonal {
    /// Weights must lie in `[0, 1]` and sum to one. Rounding noise of
    /// magnitude below [`TOL`] outside `[0, 1]` is clamped.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::from_weights([a, b, c, d])
    }

    pub fn from_weights(mut weights: [f64; 4]) -> Result<Self> {
        for w in weights.iter_mut() {
            if !w.is_finite() || *w < -TOL || *w > 1.0 + TOL {
                return Err(Error::InvalidParameter(format!(
                    "Bell weights must lie in [0, 1], got {weights:?}"
                )));
            }
            *w = w.clamp(0.0, 1.0);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidParameter(format!(
                "Bell weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    pub(crate) fn from_weights_unchecked(weights: [f64; 4]) -> Self {
        Self { weights }
    }

    pub fn werner(fidelity: f64) -> Result<Self> {
        Ok(WernerParam::new(fidelity)?.to_bell_diagonal())
    }

    pub fn a(&self) -> f64 {
        self.weights[0]
    }
    pub fn b(&self) -> f64 {
        self.weights[1]
    }
    pub fn c(&self) -> f64 {
        self.weights[2]
    }
    pub fn d(&self) -> f64 {
        self.weights[3]
    }

    pub fn weights(&self) -> [f64; 4] {
        self.weights
    }

    pub fn fidelity(&self) -> f64 {
        self.weights[0]
    }

    /// Relabel: output slot `s` takes the weight at `perm[s]`.
    pub fn permuted(&self, perm: [usize; 4]) -> Self {
        Self {
            weights: perm.map(|s| self.weights[s]),
        }
    }
}

/// Bell fidelity `F` of a Werner state, `W_F = (F, (1−F)/3, (1−F)/3, (1−F)/3)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WernerParam(f64);

impl WernerParam {
    pub fn new(fidelity: f64) -> Result<Self> {
        if !(0.25..=1.0).contains(&fidelity) {
            return Err(Error::InvalidParameter(format!(
                "Werner fidelity {fidelity} outside [1/4, 1]"
            )));
        }
        Ok(Self(fidelity))
    }

    pub fn fidelity(self) -> f64 {
        self.0
    }

    pub fn to_bell_diagonal(self) -> BellDiagonal {
        let r = (1.0 - self.0) / 3.0;
        BellDiagonal::from_weights_unchecked([self.0, r, r, r])
    }
}

/// Single-qubit channel applied to Bob's half of `|Φ+⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChannelSpec {
    /// `(1−p)σ + p·I/2`.
    Depolarising { p: f64 },
    /// `(1−p)σ + p·ZσZ`.
    Dephasing { p: f64 },
    /// `(1−p)σ + p(w_z ZσZ + w_x XσX + w_y YσY)`.
    Pauli { p: f64, wz: f64, wx: f64, wy: f64 },
    /// Kraus pair `diag(1, √(1−γ))`, `√γ|0⟩⟨1|`.
    AmplitudeDamping { gamma: f64 },
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} outside [0, 1]")))
    }
}

fn pauli_x() -> Matrix2<Complex64> {
    Matrix2::new(C0, C1, C1, C0)
}
fn pauli_y() -> Matrix2<Complex64> {
    Matrix2::new(C0, -CI, CI, C0)
}
fn pauli_z() -> Matrix2<Complex64> {
    Matrix2::new(C1, C0, C0, -C1)
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelSpec::Depolarising { p } | ChannelSpec::Dephasing { p } => check_unit("p", p),
            ChannelSpec::Pauli { p, wz, wx, wy } => {
                check_unit("p", p)?;
                check_unit("w_z", wz)?;
                check_unit("w_x", wx)?;
                check_unit("w_y", wy)?;
                if (wz + wx + wy - 1.0).abs() > TOL {
                    return Err(Error::InvalidParameter(format!(
                        "Pauli flip weights sum to {}, expected 1",
                        wz + wx + wy
                    )));
                }
                Ok(())
            }
            ChannelSpec::AmplitudeDamping { gamma } => check_unit("gamma", gamma),
        }
    }

    pub fn kraus_ops(&self) -> Result<Vec<Matrix2<Complex64>>> {
        self.validate()?;
        let s = |x: f64| Complex64::new(x.sqrt(), 0.0);
        let id = Matrix2::identity();
        Ok(match *self {
            ChannelSpec::Depolarising { p } => vec![
                id * s(1.0 - 0.75 * p),
                pauli_x() * s(p / 4.0),
                pauli_y() * s(p / 4.0),
                pauli_z() * s(p / 4.0),
            ],
            ChannelSpec::Dephasing { p } => vec![id * s(1.0 - p), pauli_z() * s(p)],
            ChannelSpec::Pauli { p, wz, wx, wy } => vec![
                id * s(1.0 - p),
                pauli_z() * s(p * wz),
                pauli_x() * s(p * wx),
                pauli_y() * s(p * wy),
            ],
            ChannelSpec::AmplitudeDamping { gamma } => vec![
                Matrix2::new(C1, C0, C0, s(1.0 - gamma)),
                Matrix2::new(C0, s(gamma), C0, C0),
            ],
        })
    }

    /// Closed-form Bell fidelity of the channel's output state.
    pub fn output_fidelity(&self) -> f64 {
        match *self {
            ChannelSpec::Depolarising { p } => 1.0 - 0.75 * p,
            ChannelSpec::Dephasing { p } | ChannelSpec::Pauli { p, .. } => 1.0 - p,
            ChannelSpec::AmplitudeDamping { gamma } => {
                let r = 1.0 + (1.0 - gamma).sqrt();
                r * r / 4.0
            }
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            ChannelSpec::Depolarising { p }
            | ChannelSpec::Dephasing { p }
            | ChannelSpec::Pauli { p, .. } => p,
            ChannelSpec::AmplitudeDamping { gamma } => gamma,
        }
    }

    pub fn family(&self) -> ChannelFamily {
        match *self {
            ChannelSpec::Depolarising { .. } => ChannelFamily::Depolarising,
            ChannelSpec::Dephasing { .. } => ChannelFamily::Dephasing,
            ChannelSpec::Pauli { wz, wx, wy, .. } => ChannelFamily::Pauli { wz, wx, wy },
            ChannelSpec::AmplitudeDamping { .. } => ChannelFamily::AmplitudeDamping,
        }
    }
}

/// A channel family with its strength parameter left free.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChannelFamily {
    Depolarising,
    Dephasing,
    Pauli { wz: f64, wx: f64, wy: f64 },
    AmplitudeDamping,
}

impl ChannelFamily {
    /// Default conditional flip weights of the Pauli channel:
    /// phase 1/2, bit 1/3, both 1/6.
    pub fn default_pauli() -> Self {
        ChannelFamily::Pauli {
            wz: 0.5,
            wx: 1.0 / 3.0,
            wy: 1.0 / 6.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChannelFamily::Depolarising => "depolarising",
            ChannelFamily::Dephasing => "dephasing",
            ChannelFamily::Pauli { .. } => "pauli",
            ChannelFamily::AmplitudeDamping => "amplitude-damping",
        }
    }

    pub fn at(&self, param: f64) -> Result<ChannelSpec> {
        let spec = match *self {
            ChannelFamily::Depolarising => ChannelSpec::Depolarising { p: param },
            ChannelFamily::Dephasing => ChannelSpec::Dephasing { p: param },
            ChannelFamily::Pauli { wz, wx, wy } => ChannelSpec::Pauli {
                p: param,
                wz,
                wx,
                wy,
            },
            ChannelFamily::AmplitudeDamping => ChannelSpec::AmplitudeDamping { gamma: param },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Inverts [`ChannelSpec::output_fidelity`]: the channel parameter that
    /// yields initial Bell fidelity `fidelity`.
    pub fn parameter_for_fidelity(&self, fidelity: f64) -> Result<f64> {
        let p = match self {
            ChannelFamily::Depolarising => 4.0 * (1.0 - fidelity) / 3.0,
            ChannelFamily::Dephasing | ChannelFamily::Pauli { .. } => 1.0 - fidelity,
            ChannelFamily::AmplitudeDamping => {
                if fidelity < 0.25 {
                    -1.0
                } else {
                    let r = 2.0 * fidelity.sqrt() - 1.0;
                    1.0 - r * r
                }
            }
        };
        // Snap rounding noise at the ends of the interval.
        let p = if p.abs() < TOL {
            0.0
        } else if (p - 1.0).abs() < TOL {
            1.0
        } else {
            p
        };
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "no {} channel yields Bell fidelity {fidelity}",
                self.name()
            )));
        }
        Ok(p)
    }
}

/// `(1_A ⊗ E_B)(|Φ+⟩⟨Φ+|)`.
pub fn apply_channel(channel: &ChannelSpec) -> Result<TwoQubitDensity> {
    let phi = TwoQubitDensity::pure(BellLabel::PhiPlus);
    let id = Matrix2::<Complex64>::identity();
    let mut rho = Matrix4::<Complex64>::zeros();
    for k in channel.kraus_ops()? {
        let op = id.kronecker(&k);
        rho += op * phi.matrix() * op.adjoint();
    }
    TwoQubitDensity::new(rho)
}

/// Bell-basis diagonal of `state`; off-diagonal Bell coherences are dropped.
pub fn bell_diagonal_of(state: &TwoQubitDensity) -> Result<BellDiagonal> {
    state.validate()?;
    let weights = BellLabel::ALL.map(|l| {
        let k = l.ket();
        (k.adjoint() * state.matrix() * k)[(0, 0)].re
    });
    BellDiagonal::from_weights(weights)
}

pub fn bell_fidelity(state: &BellDiagonal) -> f64 {
    state.a()
}

/// Fidelity between two commuting Bell-diagonal states, `(Σ √(x_i y_i))²`.
pub fn diagonal_fidelity(x: &BellDiagonal, y: &BellDiagonal) -> f64 {
    let root: f64 = x
        .weights()
        .iter()
        .zip(y.weights().iter())
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    (root * root).min(1.0)
}

/// Fidelity between the Werner states `W_f1` and `W_f2`.
pub fn werner_fidelity(f1: f64, f2: f64) -> f64 {
    let root = (f1 * f2).sqrt() + ((1.0 - f1) * (1.0 - f2)).sqrt();
    (root * root).min(1.0)
}

pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("binary entropy argument {x} outside [0, 1]")));
    }
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// Relative-entropy-of-entanglement ceiling on the rate of converting Werner
/// states of fidelity `f_initial` into Werner states of fidelity `f_target`:
/// `(1 − h(F_initial)) / (1 − h(F_target))`.
///
/// Both fidelities must lie in `(1/2, 1]`.
pub fn ree_rate_bound(f_initial: f64, f_target: f64) -> Result<f64> {
    for (name, f) in [("F_initial", f_initial), ("F_target", f_target)] {
        if !(f > 0.5 && f <= 1.0) {
            return Err(Error::Domain(format!("{name} = {f} outside (1/2, 1]")));
        }
    }
    let num = 1.0 - binary_entropy(f_initial)?;
    let den = 1.0 - binary_entropy(f_target)?;
    if den <= 0.0 {
        return Err(Error::Domain(format!(
            "h(F_target) = 1 at F_target = {f_target}"
        )));
    }
    Ok(num / den)
}
