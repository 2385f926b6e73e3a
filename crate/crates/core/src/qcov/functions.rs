//! Test functions and the shipped registry.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function with optional derivatives and a declared Gaussian growth
/// exponent `beta` (`|f(z)| <= C exp(beta z²)`).
#[derive(Clone)]
pub struct TestFunction {
    id: String,
    eval: RealFn,
    deriv: Option<RealFn>,
    deriv2: Option<RealFn>,
    antideriv: Option<RealFn>,
    beta: f64,
    kinks: Vec<f64>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("id", &self.id)
            .field("beta", &self.beta)
            .field("deriv", &self.deriv.is_some())
            .field("deriv2", &self.deriv2.is_some())
            .field("antideriv", &self.antideriv.is_some())
            .field("kinks", &self.kinks)
            .finish()
    }
}

fn wrap(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> RealFn {
    Arc::new(f)
}

impl TestFunction {
    pub fn new(id: impl Into<String>, beta: f64, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            id: id.into(),
            eval: wrap(eval),
            deriv: None,
            deriv2: None,
            antideriv: None,
            beta,
            kinks: Vec::new(),
        }
    }

    pub fn with_deriv(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.deriv = Some(wrap(d));
        self
    }

    pub fn with_deriv2(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.deriv2 = Some(wrap(d));
        self
    }

    pub fn with_antideriv(mut self, a: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.antideriv = Some(wrap(a));
        self
    }

    /// Points where the function or its derivative is not smooth.
    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn has_deriv(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn deriv(&self) -> Result<&RealFn> {
        self.deriv.as_ref().ok_or_else(|| Error::MissingDerivative(self.id.clone()))
    }

    pub fn deriv2(&self) -> Result<&RealFn> {
        self.deriv2.as_ref().ok_or_else(|| Error::MissingDerivative(format!("{} (second)", self.id)))
    }

    pub fn antideriv(&self) -> Option<&RealFn> {
        self.antideriv.as_ref()
    }

    /// The derivative as a test function of its own (growth exponent kept).
    pub fn derivative(&self) -> Result<TestFunction> {
        let d = self.deriv()?.clone();
        Ok(TestFunction {
            id: format!("{}'", self.id),
            eval: d,
            deriv: self.deriv2.clone(),
            deriv2: None,
            antideriv: Some(self.eval.clone()),
            beta: self.beta,
            kinks: self.kinks.clone(),
        })
    }

    /// `a f + b g`, with derivatives where both operands have them.
    pub fn linear_combination(a: f64, f: &TestFunction, b: f64, g: &TestFunction) -> TestFunction {
        let comb = |x: &RealFn, y: &RealFn| -> RealFn {
            let (x, y) = (x.clone(), y.clone());
            wrap(move |z| a * x(z) + b * y(z))
        };
        let both = |x: &Option<RealFn>, y: &Option<RealFn>| match (x, y) {
            (Some(x), Some(y)) => Some(comb(x, y)),
            _ => None,
        };
        let mut kinks = f.kinks.clone();
        kinks.extend_from_slice(&g.kinks);
        TestFunction {
            id: format!("{a}*{}+{b}*{}", f.id, g.id),
            eval: comb(&f.eval, &g.eval),
            deriv: both(&f.deriv, &g.deriv),
            deriv2: both(&f.deriv2, &g.deriv2),
            antideriv: both(&f.antideriv, &g.antideriv),
            beta: f.beta.max(g.beta),
            kinks,
        }
    }

    /// Finite-difference check of registered derivatives and a growth check
    /// against the declared `beta`, on a fixed probe set.
    pub fn validate(&self) -> Result<()> {
        let probes: Vec<f64> = (-48..=48).map(|i| i as f64 * 0.125 + 0.0371).collect();
        let near_kink = |x: f64| self.kinks.iter().any(|k| (x - k).abs() < 1e-2);
        let h = 1e-5;
        let tol = 1e-5;
        let check = |name: &str, f: &RealFn, d: &RealFn| -> Result<()> {
            for &x in probes.iter().filter(|&&x| !near_kink(x)) {
                let fd = (f(x + h) - f(x - h)) / (2.0 * h);
                let dv = d(x);
                if (fd - dv).abs() > tol * (1.0 + dv.abs()) {
                    return Err(Error::Domain(format!(
                        "{name} of `{}` disagrees with finite differences at {x}: {dv} vs {fd}",
                        self.id
                    )));
                }
            }
            Ok(())
        };
        if let Some(d) = &self.deriv {
            check("derivative", &self.eval, d)?;
            if let Some(d2) = &self.deriv2 {
                check("second derivative", d, d2)?;
            }
        }
        if let Some(a) = &self.antideriv {
            check("antiderivative", a, &self.eval)?;
        }
        // The growth constant is taken from the inner probes and must cover the outer ones.
        let weighted = |x: f64| self.eval(x).abs() * (-self.beta * x * x).exp();
        let c = probes.iter().filter(|x| x.abs() <= 1.5).map(|&x| weighted(x)).fold(0.0, f64::max);
        let limit = 100.0 * (1.0 + c);
        for &x in &probes {
            if !self.eval(x).is_finite() || weighted(x) > limit {
                return Err(Error::Growth {
                    id: self.id.clone(),
                    beta: self.beta,
                    limit,
                });
            }
        }
        Ok(())
    }
}

/// Constructors for the shipped functions and lookup by name.
pub mod registry {
    use super::*;

    pub fn constant(c: f64) -> TestFunction {
        TestFunction::new(format!("const:{c}"), 0.0, move |_| c)
            .with_deriv(|_| 0.0)
            .with_deriv2(|_| 0.0)
            .with_antideriv(move |y| c * y)
    }

    pub fn identity() -> TestFunction {
        TestFunction::new("identity", 0.0, |y| y)
            .with_deriv(|_| 1.0)
            .with_deriv2(|_| 0.0)
            .with_antideriv(|y| 0.5 * y * y)
    }

    /// `y²/2`, the antiderivative of the identity.
    pub fn half_square() -> TestFunction {
        TestFunction::new("half_square", 0.0, |y| 0.5 * y * y)
            .with_deriv(|y| y)
            .with_deriv2(|_| 1.0)
            .with_antideriv(|y| y * y * y / 6.0)
    }

    pub fn square() -> TestFunction {
        TestFunction::new("square", 0.0, |y| y * y)
            .with_deriv(|y| 2.0 * y)
            .with_deriv2(|_| 2.0)
            .with_antideriv(|y| y * y * y / 3.0)
    }

    pub fn cube() -> TestFunction {
        TestFunction::new("cube", 0.0, |y| y * y * y)
            .with_deriv(|y| 3.0 * y * y)
            .with_deriv2(|y| 6.0 * y)
            .with_antideriv(|y| y.powi(4) / 4.0)
    }

    pub fn sin() -> TestFunction {
        TestFunction::new("sin", 0.0, f64::sin)
            .with_deriv(f64::cos)
            .with_deriv2(|y| -y.sin())
            .with_antideriv(|y| -y.cos())
    }

    /// `1_{(a, b]}`.
    pub fn indicator(a: f64, b: f64) -> TestFunction {
        TestFunction::new(format!("indicator:{a}:{b}"), 0.0, move |y| if y > a && y <= b { 1.0 } else { 0.0 })
            .with_antideriv(move |y| (y.min(b) - a).max(0.0).min(b - a))
            .with_kinks(vec![a, b])
    }

    /// `(y - a)⁺`, with derivative `1_{y > a}`.
    pub fn positive_part(a: f64) -> TestFunction {
        TestFunction::new(format!("positive_part:{a}"), 0.0, move |y| (y - a).max(0.0))
            .with_deriv(move |y| if y > a { 1.0 } else { 0.0 })
            .with_antideriv(move |y| 0.5 * (y - a).max(0.0).powi(2))
            .with_kinks(vec![a])
    }

    /// `(y - a)⁻ = max(a - y, 0)`, with derivative `-1_{y < a}`.
    pub fn negative_part(a: f64) -> TestFunction {
        TestFunction::new(format!("negative_part:{a}"), 0.0, move |y| (a - y).max(0.0))
            .with_deriv(move |y| if y < a { -1.0 } else { 0.0 })
            .with_kinks(vec![a])
    }

    /// `|y - a|`, with derivative `sign(y - a)`.
    pub fn abs(a: f64) -> TestFunction {
        TestFunction::new(format!("abs:{a}"), 0.0, move |y| (y - a).abs())
            .with_deriv(move |y| sign_of(y - a))
            .with_kinks(vec![a])
    }

    fn sign_of(v: f64) -> f64 {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    /// `sign(y - a)`.
    pub fn sign(a: f64) -> TestFunction {
        TestFunction::new(format!("sign:{a}"), 0.0, move |y| sign_of(y - a))
            .with_antideriv(move |y| (y - a).abs())
            .with_kinks(vec![a])
    }

    /// `exp(beta y²)`, used to probe the growth threshold of the weighted norms.
    pub fn gauss_growth(beta: f64) -> TestFunction {
        TestFunction::new(format!("gauss_growth:{beta}"), beta, move |y| (beta * y * y).exp())
            .with_deriv(move |y| 2.0 * beta * y * (beta * y * y).exp())
            .with_deriv2(move |y| (2.0 * beta + 4.0 * beta * beta * y * y) * (beta * y * y).exp())
    }

    fn param(id: &str, parts: &[&str], i: usize) -> Result<f64> {
        parts
            .get(i)
            .ok_or_else(|| Error::Config(format!("function `{id}` is missing parameter {i}")))?
            .parse()
            .map_err(|_| Error::Config(format!("function `{id}` has a non-numeric parameter")))
    }

    /// Parse an id such as `sin`, `const:2`, `indicator:-0.3:0.3`, `positive_part:0`.
    pub fn lookup(id: &str) -> Result<TestFunction> {
        let parts: Vec<&str> = id.split(':').collect();
        let f = match parts[0] {
            "identity" => identity(),
            "half_square" => half_square(),
            "square" => square(),
            "cube" => cube(),
            "sin" => sin(),
            "const" => constant(param(id, &parts, 1)?),
            "indicator" => indicator(param(id, &parts, 1)?, param(id, &parts, 2)?),
            "positive_part" => positive_part(param(id, &parts, 1)?),
            "negative_part" => negative_part(param(id, &parts, 1)?),
            "abs" => abs(param(id, &parts, 1)?),
            "sign" => sign(param(id, &parts, 1)?),
            "gauss_growth" => gauss_growth(param(id, &parts, 1)?),
            other => return Err(Error::Config(format!("unknown function `{other}`"))),
        };
        Ok(f)
    }

    /// The shipped functions with bounded growth, used for registry-wide checks.
    pub fn shipped() -> Vec<TestFunction> {
        vec![
            constant(1.0),
            identity(),
            half_square(),
            square(),
            cube(),
            sin(),
            indicator(-0.3, 0.3),
            positive_part(0.0),
            sign(0.0),
            gauss_growth(0.1),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::registry::*;
    use super::*;

    #[test]
    fn shipped_functions_validate() {
        for f in shipped() {
            f.validate().unwrap_or_else(|e| panic!("{}: {e}", f.id()));
        }
        for f in [negative_part(0.2), abs(-0.1)] {
            f.validate().unwrap();
        }
    }

    #[test]
    fn wrong_derivative_is_caught() {
        let f = TestFunction::new("bad", 0.0, |y| y * y).with_deriv(|y| y);
        assert!(f.validate().is_err());
    }

    #[test]
    fn understated_growth_is_caught() {
        let f = TestFunction::new("fast", 0.0, |y: f64| (0.5 * y * y).exp());
        assert!(matches!(f.validate(), Err(Error::Growth { .. })));
    }

    #[test]
    fn lookup_parses_parameters() {
        let f = lookup("indicator:-0.3:0.3").unwrap();
        assert_eq!(f.eval(0.0), 1.0);
        assert_eq!(f.eval(-0.3), 0.0);
        assert_eq!(f.eval(0.3), 1.0);
        assert_eq!(lookup("const:2.5").unwrap().eval(7.0), 2.5);
        assert!(lookup("tan").is_err());
        assert!(lookup("sign").is_err());
    }

    #[test]
    fn derivative_chain() {
        let d = half_square().derivative().unwrap();
        assert_eq!(d.eval(3.0), 3.0);
        assert_eq!(d.deriv().unwrap()(3.0), 1.0);
        assert!(indicator(0.0, 1.0).derivative().is_err());
    }
}
