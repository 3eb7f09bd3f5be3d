use std::fmt;

/// Scalar activation appearing in a kernel's four-activation decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// `t`
    Identity,
    /// `exp(t)`
    Exp,
    /// `exp(-t)`
    NegExp,
    /// `log(t)^2`
    LogSquared,
    /// `t^p`
    Pow { p: u32 },
    /// `1 / (1 + exp(-beta t))`
    Logistic { beta: f64 },
    /// `tanh(a t + b)`
    TanhAffine { a: f64, b: f64 },
    /// `exp(-beta t)`
    ExpNegScaled { beta: f64 },
    /// `exp(-beta sqrt(t))`
    ExpNegSqrt { beta: f64 },
    /// `-t^(p/2)`
    NegHalfPow { p: u32 },
    /// `1 / sqrt(t + b^2)`
    InvSqrtOffset { b: f64 },
    /// `-log(t^(p/2) + 1)`
    NegLogHalfPow { p: u32 },
    /// `1 / (1 + t / sigma2)`
    CauchyRatio { sigma2: f64 },
    /// `exp(exp(beta (1 - t)))`
    DoubleExp { beta: f64 },
    /// `-(1/beta) log(log(t)) + 1`
    NegLogLog { beta: f64 },
}

impl Activation {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Activation::Identity => t,
            Activation::Exp => t.exp(),
            Activation::NegExp => (-t).exp(),
            Activation::LogSquared => {
                let l = t.ln();
                l * l
            }
            Activation::Pow { p } => t.powi(p as i32),
            Activation::Logistic { beta } => logistic(beta * t),
            Activation::TanhAffine { a, b } => (a * t + b).tanh(),
            Activation::ExpNegScaled { beta } => (-beta * t).exp(),
            Activation::ExpNegSqrt { beta } => (-beta * t.sqrt()).exp(),
            Activation::NegHalfPow { p } => -half_pow(t, p),
            Activation::InvSqrtOffset { b } => 1.0 / (t + b * b).sqrt(),
            Activation::NegLogHalfPow { p } => -(half_pow(t, p) + 1.0).ln(),
            Activation::CauchyRatio { sigma2 } => 1.0 / (1.0 + t / sigma2),
            Activation::DoubleExp { beta } => (beta * (1.0 - t)).exp().exp(),
            Activation::NegLogLog { beta } => -t.ln().ln() / beta + 1.0,
        }
    }

    /// `ln(self.eval(t))` in closed form, for the exponential-type activations
    /// whose values overflow long before their logarithms do.
    pub fn ln_eval(&self, t: f64) -> Option<f64> {
        match *self {
            Activation::Exp => Some(t),
            Activation::NegExp => Some(-t),
            Activation::DoubleExp { beta } => Some((beta * (1.0 - t)).exp()),
            _ => None,
        }
    }

    /// `self.eval(exp(ln_t))` for activations that start by taking a logarithm.
    pub fn eval_from_ln(&self, ln_t: f64) -> Option<f64> {
        match *self {
            Activation::LogSquared => Some(ln_t * ln_t),
            Activation::NegLogLog { beta } => Some(-ln_t.ln() / beta + 1.0),
            _ => None,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Activation::Identity => write!(f, "t"),
            Activation::Exp => write!(f, "exp(t)"),
            Activation::NegExp => write!(f, "exp(-t)"),
            Activation::LogSquared => write!(f, "log(t)^2"),
            Activation::Pow { p } => write!(f, "t^{p}"),
            Activation::Logistic { beta } => write!(f, "1/(1+exp(-{beta}*t))"),
            Activation::TanhAffine { a, b } => write!(f, "tanh({a}*t+{b})"),
            Activation::ExpNegScaled { beta } => write!(f, "exp(-{beta}*t)"),
            Activation::ExpNegSqrt { beta } => write!(f, "exp(-{beta}*sqrt(t))"),
            Activation::NegHalfPow { p } => write!(f, "-t^({p}/2)"),
            Activation::InvSqrtOffset { b } => write!(f, "1/sqrt(t+{b}^2)"),
            Activation::NegLogHalfPow { p } => write!(f, "-log(t^({p}/2)+1)"),
            Activation::CauchyRatio { sigma2 } => write!(f, "1/(1+t/{sigma2})"),
            Activation::DoubleExp { beta } => write!(f, "exp(exp({beta}*(1-t)))"),
            Activation::NegLogLog { beta } => write!(f, "-(1/{beta})*log(log(t))+1"),
        }
    }
}

/// The four activations whose composition `s3(sum_d s2(s1(u_d) * s4(v_d)))`
/// realizes a kernel as standard neural units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaQuad {
    pub s1: Activation,
    pub s2: Activation,
    pub s3: Activation,
    pub s4: Activation,
}

#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `t^(p/2)` for `t >= 0`, exact for even `p`.
#[inline]
pub(crate) fn half_pow(t: f64, p: u32) -> f64 {
    if p.is_multiple_of(2) {
        t.powi((p / 2) as i32)
    } else {
        t.sqrt().powi(p as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_domain_forms_agree_with_direct() {
        for t in [-1.5, 0.0, 0.3, 2.0] {
            for a in [Activation::Exp, Activation::NegExp, Activation::DoubleExp { beta: 2.0 }] {
                assert!((a.ln_eval(t).unwrap() - a.eval(t).ln()).abs() < 1e-12);
            }
        }
        for t in [1.5f64, 3.0, 40.0] {
            let ls = Activation::LogSquared;
            assert!((ls.eval_from_ln(t.ln()).unwrap() - ls.eval(t)).abs() < 1e-12);
            let ll = Activation::NegLogLog { beta: 3.0 };
            assert!((ll.eval_from_ln(t.ln()).unwrap() - ll.eval(t)).abs() < 1e-12);
        }
        assert!(Activation::Identity.ln_eval(1.0).is_none());
        assert!(Activation::Identity.eval_from_ln(1.0).is_none());
    }

    #[test]
    fn half_pow_odd_and_even() {
        assert_eq!(half_pow(9.0, 2), 9.0);
        assert_eq!(half_pow(9.0, 1), 3.0);
        assert!((half_pow(4.0, 3) - 8.0).abs() < 1e-15);
    }
}
