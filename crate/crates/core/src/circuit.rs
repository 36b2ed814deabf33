//! Gate-level simulation of one DEJMPS round on the 16-dimensional space of
//! two pairs. Independent of the closed-form recurrence in [`crate::dejmps`]
//! and used to check it.
//!
//! Qubit order is `A1 B1 A2 B2` (pair 1 is the source pair), so the joint
//! state is simply `ρ ⊗ ρ'`.

use nalgebra::{Matrix2, SMatrix};
use num_complex::Complex64;

use crate::bell::{bell_diagonal_of, TwoQubitDensity};
use crate::dejmps::StepOutcome;
use crate::error::{Error, Result};

type M16 = SMatrix<Complex64, 16, 16>;

/// `U|0⟩ = (|0⟩ − i|1⟩)/√2`, `U|1⟩ = (|1⟩ − i|0⟩)/√2`.
fn alice_rotation() -> Matrix2<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let re = Complex64::new(h, 0.0);
    let im = Complex64::new(0.0, -h);
    // Columns are the images of |0⟩ and |1⟩.
    Matrix2::new(re, im, im, re)
}

fn bilateral_cnot() -> M16 {
    let mut m = M16::zeros();
    for idx in 0..16usize {
        let a1 = (idx >> 3) & 1;
        let b1 = (idx >> 2) & 1;
        let a2 = ((idx >> 1) & 1) ^ a1;
        let b2 = (idx & 1) ^ b1;
        let out = (a1 << 3) | (b1 << 2) | (a2 << 1) | b2;
        m[(out, idx)] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn dejmps_step_circuit_oracle(
    x: &TwoQubitDensity,
    y: &TwoQubitDensity,
) -> Result<StepOutcome> {
    x.validate()?;
    y.validate()?;
    let joint: M16 = x.matrix().kronecker(y.matrix());

    let u = alice_rotation();
    let ud = u.adjoint();
    let local: M16 = u.kronecker(&ud).kronecker(&u.kronecker(&ud));
    let gate = bilateral_cnot() * local;
    let evolved = gate * joint * gate.adjoint();

    // Keep outcomes where A2 and B2 agree, then trace them out.
    let mut kept = nalgebra::Matrix4::<Complex64>::zeros();
    for r in 0..4 {
        for c in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in [0b00usize, 0b11] {
                acc += evolved[(r * 4 + m, c * 4 + m)];
            }
            kept[(r, c)] = acc;
        }
    }
    let t = kept.trace().re;
    if t <= 1e-15 {
        return Err(Error::DegenerateStep);
    }
    kept /= Complex64::new(t, 0.0);
    let kept = TwoQubitDensity::new(kept)?;
    Ok(StepOutcome {
        success_prob: t,
        output: bell_diagonal_of(&kept)?,
    })
}
