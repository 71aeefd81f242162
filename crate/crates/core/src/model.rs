//! Werner-state fidelity algebra: nested swapping, one round of noisy
//! symmetric distillation, its success probability, and the n-round
//! recursion.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, ModelResult};
use crate::scalar::Scalar;

/// Iteration cap for [`distill_fixed_point`].
pub const FIXED_POINT_MAX_ITERATIONS: usize = 10_000;

/// Default convergence tolerance for [`distill_fixed_point`].
pub const FIXED_POINT_DEFAULT_TOL: f64 = 1e-12;

/// Lowest fidelity a distillation round accepts.
pub const DISTILL_MIN_FIDELITY: f64 = 0.5;

/// Gate and measurement fidelities shared by every node of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams<T = f64> {
    p2: T,
    eta: T,
}

impl<T: Scalar> NoiseParams<T> {
    /// `p2` is the two-qubit gate fidelity, `eta` the measurement fidelity.
    /// Both must lie in (0, 1].
    pub fn new(p2: T, eta: T) -> ModelResult<Self> {
        for (what, v) in [("p2_gate_fidelity", p2), ("eta_measurement_fidelity", eta)] {
            if !(v > T::zero() && v <= T::one()) {
                return Err(ModelError::domain(what, v.as_f64(), "(0, 1]"));
            }
        }
        Ok(Self { p2, eta })
    }

    pub fn perfect() -> Self {
        Self {
            p2: T::one(),
            eta: T::one(),
        }
    }

    pub fn p2(&self) -> T {
        self.p2
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    /// Per-swap depolarizing factor `P2 (4 eta^2 - 1) / 3`.
    pub fn swap_factor(&self) -> T {
        let four = T::lit(4.0);
        let three = T::lit(3.0);
        self.p2 * (four * self.eta * self.eta - T::one()) / three
    }
}

/// Fidelity of a Werner state, always in [1/4, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fidelity<T = f64>(T);

impl<T: Scalar> Fidelity<T> {
    pub fn new(value: T) -> ModelResult<Self> {
        let slack = T::epsilon() * T::lit(8.0);
        if value >= T::lit(0.25) - slack && value <= T::one() + slack {
            Ok(Self(value))
        } else {
            Err(ModelError::domain("fidelity", value.as_f64(), "[0.25, 1]"))
        }
    }

    pub fn one() -> Self {
        Self(T::one())
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// `(4F - 1) / 3`, the Werner parameter of this state.
    #[inline]
    pub fn werner_weight(self) -> T {
        (T::lit(4.0) * self.0 - T::one()) / T::lit(3.0)
    }
}

/// Fidelities and success probabilities observed along `n` distillation
/// rounds.
///
/// `per_round_fidelity[i]` is the fidelity entering round `i + 1`; the last
/// entry is the output of the final round, so it holds `n + 1` values.
/// `per_round_success_prob[i]` is the success probability of round `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillationTrace<T = f64> {
    pub per_round_fidelity: Vec<Fidelity<T>>,
    pub per_round_success_prob: Vec<T>,
}

impl<T: Scalar> DistillationTrace<T> {
    fn start(f0: Fidelity<T>, rounds: usize) -> Self {
        let mut per_round_fidelity = Vec::with_capacity(rounds + 1);
        per_round_fidelity.push(f0);
        Self {
            per_round_fidelity,
            per_round_success_prob: Vec::with_capacity(rounds),
        }
    }

    pub fn rounds(&self) -> usize {
        self.per_round_success_prob.len()
    }

    pub fn initial(&self) -> Fidelity<T> {
        self.per_round_fidelity[0]
    }

    pub fn final_fidelity(&self) -> Fidelity<T> {
        *self
            .per_round_fidelity
            .last()
            .expect("trace always holds the input fidelity")
    }

    /// Product of `P_S / 2` over all recorded rounds; the factor by which the
    /// pair rate shrinks. Equals 1 for an empty trace.
    pub fn rate_factor(&self) -> T {
        let two = T::lit(2.0);
        self.per_round_success_prob
            .iter()
            .fold(T::one(), |acc, &p| acc / (two / p))
    }
}

/// Fidelity `(3w + 1) / 4` of a Werner mixture with Bell-state weight `w`.
pub fn werner_fidelity<T: Scalar>(w: T) -> ModelResult<Fidelity<T>> {
    if !(w >= T::zero() && w <= T::one()) {
        return Err(ModelError::domain("werner weight", w.as_f64(), "[0, 1]"));
    }
    Ok(Fidelity((T::lit(3.0) * w + T::one()) / T::lit(4.0)))
}

fn check_swap_output<T: Scalar>(value: T) -> ModelResult<Fidelity<T>> {
    // Only reachable when eta < 1/2 makes the swap factor negative.
    Fidelity::new(value)
}

fn exponent(n: usize) -> ModelResult<i32> {
    i32::try_from(n).map_err(|_| ModelError::domain("n_links", n as f64, "fits in i32"))
}

/// End-to-end fidelity after swapping `n_links` identical links.
pub fn swap_chain_fidelity<T: Scalar>(
    f_link: Fidelity<T>,
    n_links: usize,
    noise: &NoiseParams<T>,
) -> ModelResult<Fidelity<T>> {
    if n_links < 1 {
        return Err(ModelError::domain("n_links", 0.0, ">= 1"));
    }
    if n_links == 1 {
        return Ok(f_link);
    }
    let swaps = exponent(n_links - 1)?;
    let links = exponent(n_links)?;
    let value = T::lit(0.25) + T::lit(0.75) * noise.swap_factor().powi(swaps) * f_link.werner_weight().powi(links);
    check_swap_output(value)
}

/// End-to-end fidelity after swapping links of individually given fidelity.
pub fn swap_chain_fidelity_heterogeneous<T: Scalar>(
    links: &[Fidelity<T>],
    noise: &NoiseParams<T>,
) -> ModelResult<Fidelity<T>> {
    match links {
        [] => Err(ModelError::domain("n_links", 0.0, ">= 1")),
        [only] => Ok(*only),
        _ => {
            let swaps = exponent(links.len() - 1)?;
            let product = links.iter().fold(T::one(), |acc, f| acc * f.werner_weight());
            let value = T::lit(0.25) + T::lit(0.75) * noise.swap_factor().powi(swaps) * product;
            check_swap_output(value)
        }
    }
}

/// The six terms of the noisy symmetric distillation map, kept separate so
/// the fidelity map and the success probability share them verbatim.
#[derive(Debug, Clone, Copy)]
struct DistillTerms<T> {
    a: T,
    b: T,
    c: T,
    d: T,
    e: T,
    h: T,
}

impl<T: Scalar> DistillTerms<T> {
    fn new(f_in: T, noise: &NoiseParams<T>) -> Self {
        let one = T::one();
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let eight = T::lit(8.0);
        let eta = noise.eta;
        let p2 = noise.p2;
        let off = (one - f_in) / three;

        let a = f_in * f_in + off * off;
        let b = eta * eta + (one - eta) * (one - eta);
        let c = f_in * off + off * off;
        let d = two * eta * (one - eta);
        let e = (one - p2 * p2) / (eight * p2 * p2);
        let h = f_in * f_in
            + (two / three) * f_in * (one - f_in)
            + (T::lit(5.0) / T::lit(9.0)) * (one - f_in) * (one - f_in);
        Self { a, b, c, d, e, h }
    }

    fn numerator(&self) -> T {
        self.a * self.b + self.c * self.d + self.e
    }

    fn denominator(&self) -> T {
        let four = T::lit(4.0);
        self.h * self.b + self.c * four * self.d + four * self.e
    }
}

fn check_distill_input<T: Scalar>(f_in: Fidelity<T>, round: usize) -> ModelResult<()> {
    if f_in.value() < T::lit(DISTILL_MIN_FIDELITY) {
        return Err(ModelError::DistillationInfeasible {
            round,
            fidelity: f_in.value().as_f64(),
        });
    }
    Ok(())
}

/// Output fidelity of one round of distillation on two copies of `f_in`.
pub fn distill_fidelity<T: Scalar>(f_in: Fidelity<T>, noise: &NoiseParams<T>) -> ModelResult<Fidelity<T>> {
    check_distill_input(f_in, 1)?;
    Ok(distill_unchecked(f_in, noise))
}

fn distill_unchecked<T: Scalar>(f_in: Fidelity<T>, noise: &NoiseParams<T>) -> Fidelity<T> {
    let t = DistillTerms::new(f_in.value(), noise);
    Fidelity(t.numerator() / t.denominator())
}

/// Probability that one distillation round on two copies of `f_in`
/// succeeds.
pub fn distill_success_prob<T: Scalar>(f_in: Fidelity<T>, noise: &NoiseParams<T>) -> ModelResult<T> {
    check_distill_input(f_in, 1)?;
    Ok(success_unchecked(f_in, noise))
}

fn success_unchecked<T: Scalar>(f_in: Fidelity<T>, noise: &NoiseParams<T>) -> T {
    let t = DistillTerms::new(f_in.value(), noise);
    let p = noise.p2 * noise.p2 * t.denominator();
    debug_assert!(
        p > T::zero() && p <= T::one() + T::epsilon() * T::lit(8.0),
        "success probability {p} outside (0, 1]"
    );
    p
}

/// Runs `n` rounds, returning the partial trace alongside the error when a
/// round's input drops below 1/2.
pub(crate) fn distill_rounds_partial<T: Scalar>(
    n: usize,
    f0: Fidelity<T>,
    noise: &NoiseParams<T>,
) -> Result<DistillationTrace<T>, (DistillationTrace<T>, ModelError)> {
    let mut trace = DistillationTrace::start(f0, n);
    let mut f = f0;
    for round in 1..=n {
        if let Err(e) = check_distill_input(f, round) {
            return Err((trace, e));
        }
        trace.per_round_success_prob.push(success_unchecked(f, noise));
        f = distill_unchecked(f, noise);
        trace.per_round_fidelity.push(f);
    }
    Ok(trace)
}

/// `n` iterated distillation rounds starting from `f0`.
pub fn distill_n_rounds<T: Scalar>(
    n: usize,
    f0: Fidelity<T>,
    noise: &NoiseParams<T>,
) -> ModelResult<DistillationTrace<T>> {
    distill_rounds_partial(n, f0, noise).map_err(|(_, e)| e)
}

/// Iterates the distillation map from `f_start` until successive iterates
/// differ by less than `tol`.
pub fn distill_fixed_point<T: Scalar>(
    f_start: Fidelity<T>,
    noise: &NoiseParams<T>,
    tol: T,
) -> ModelResult<Fidelity<T>> {
    if tol.is_nan() || tol <= T::zero() {
        return Err(ModelError::domain("tol", tol.as_f64(), "> 0"));
    }
    let mut f = f_start;
    for round in 1..=FIXED_POINT_MAX_ITERATIONS {
        check_distill_input(f, round)?;
        let next = distill_unchecked(f, noise);
        if (next.value() - f.value()).abs() < tol {
            return Ok(next);
        }
        f = next;
    }
    Err(ModelError::NoConvergence {
        iterations: FIXED_POINT_MAX_ITERATIONS,
        last: f.value().as_f64(),
    })
}
