//! Per-mode analysis of the linear problem `f = g = 0`: the roots of
//! `lambda^2 + gamma mu^theta lambda + mu = 0`, numerical surrogates for the
//! semigroup/smoothing classification, and the known well-posedness ranges.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::Complex64;

/// Damping multiplier `mu^theta` with `0^0 = 1` (`theta = 0` is the identity).
pub fn damping_multiplier(mu: f64, theta: f64) -> f64 {
    match theta {
        0.0 => 1.0,
        0.5 => mu.sqrt(),
        1.0 => mu,
        _ => mu.powf(theta),
    }
}

/// `b^2 - 4 mu` in factored form, so that `b = 2 sqrt(mu)` gives exactly 0.
pub(crate) fn discriminant(mu: f64, b: f64) -> f64 {
    let r = 2.0 * mu.sqrt();
    (b - r) * (b + r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModePair {
    pub mu: f64,
    /// Root with the larger real part (larger imaginary part on ties).
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// Discriminant `(gamma mu^theta)^2 - 4 mu` is exactly zero.
    pub repeated: bool,
}

impl ModePair {
    /// Vieta residuals `|l+ + l- + b|` and `|l+ l- - mu|`.
    pub fn vieta_residuals(&self, gamma: f64, theta: f64) -> (f64, f64) {
        let b = gamma * damping_multiplier(self.mu, theta);
        (
            (self.lambda_plus + self.lambda_minus + b).norm(),
            (self.lambda_plus * self.lambda_minus - self.mu).norm(),
        )
    }
}

fn check_inputs(mu: f64, gamma: f64, theta: f64) -> Result<()> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::param(format!("mu = {mu} must be finite and nonnegative")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param(format!("gamma = {gamma} must be positive")));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param(format!("theta = {theta} outside [0, 1]")));
    }
    Ok(())
}

/// Roots of `lambda^2 + gamma mu^theta lambda + mu = 0`.
///
/// Real roots: the larger-magnitude root `-(b + sqrt(disc))/2` is formed
/// without cancellation and the other follows from the product `mu`.
pub fn mode_eigenvalues(mu: f64, gamma: f64, theta: f64) -> Result<ModePair> {
    check_inputs(mu, gamma, theta)?;
    Ok(roots(mu, gamma * damping_multiplier(mu, theta)))
}

pub(crate) fn roots(mu: f64, b: f64) -> ModePair {
    let disc = discriminant(mu, b);
    let (plus, minus) = if disc >= 0.0 {
        let big = -0.5 * (b + disc.sqrt());
        let small = if big == 0.0 { 0.0 } else { mu / big };
        (Complex64::new(small, 0.0), Complex64::new(big, 0.0))
    } else {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(re, im), Complex64::new(re, -im))
    };
    ModePair {
        mu,
        lambda_plus: plus,
        lambda_minus: minus,
        repeated: disc == 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Portrait {
    pub gamma: f64,
    pub theta: f64,
    pub pairs: Vec<ModePair>,
    /// `max Re lambda` over the sweep.
    pub sup_re: f64,
    /// `max |Im lambda| / |Re lambda|` over the sweep.
    pub sector_ratio: f64,
    /// Whether `Re lambda_+` is nonincreasing along the sweep.
    pub re_plus_monotone: bool,
    /// Sampled `mu` bracketing a change of sign of the discriminant, plus any
    /// sample where it vanishes exactly.
    pub discriminant_crossings: Vec<f64>,
}

/// Roots for `count` values of `mu` log-spaced in `[1, mu_max]`.
pub fn spectrum_portrait(gamma: f64, theta: f64, mu_max: f64, count: usize) -> Result<Portrait> {
    if !(mu_max >= 1.0) || count < 10 {
        return Err(Error::param("spectrum_portrait needs mu_max >= 1 and count >= 10"));
    }
    check_inputs(1.0, gamma, theta)?;
    let top = mu_max.log10();
    let pairs: Vec<ModePair> = (0..count)
        .map(|i| {
            let mu = if i + 1 == count {
                mu_max
            } else {
                10f64.powf(top * i as f64 / (count - 1) as f64)
            };
            roots(mu, gamma * damping_multiplier(mu, theta))
        })
        .collect();
    let sup_re = pairs.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.lambda_plus.re));
    let sector_ratio = pairs.iter().fold(0.0_f64, |m, p| m.max(sector(p)));
    let re_plus_monotone = pairs.windows(2).all(|w| w[1].lambda_plus.re <= w[0].lambda_plus.re);
    let sign = |p: &ModePair| {
        let b = gamma * damping_multiplier(p.mu, theta);
        discriminant(p.mu, b).signum()
    };
    let mut discriminant_crossings = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        if p.repeated || (i > 0 && sign(&pairs[i - 1]) != sign(p)) {
            discriminant_crossings.push(p.mu);
        }
    }
    Ok(Portrait {
        gamma,
        theta,
        pairs,
        sup_re,
        sector_ratio,
        re_plus_monotone,
        discriminant_crossings,
    })
}

fn sector(p: &ModePair) -> f64 {
    [p.lambda_plus, p.lambda_minus]
        .iter()
        .map(|l| if l.im == 0.0 { 0.0 } else { l.im.abs() / l.re.abs() })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SemigroupClass {
    C0,
    CInfinity,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Smoothing {
    Asymptotic,
    Instantaneous,
    /// Instantaneous for `u_t`, asymptotic for `u`.
    SplitUV,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeIndicators {
    pub sup_re: f64,
    pub sector_ratio: f64,
    pub bounded_branch: bool,
    /// Log-log growth rate of the sector ratio over the top decade of `mu`.
    pub sector_growth: f64,
    /// Log-log growth rate of `|Re lambda_+|` over the top decade of `mu`.
    pub re_plus_growth: f64,
    /// Log-log growth rate of `|lambda_-|` over the top decade of `mu`.
    pub minus_growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub gamma: f64,
    pub theta: f64,
    pub mu_max: f64,
    pub semigroup_class: SemigroupClass,
    pub smoothing: Smoothing,
    pub max_regularity: bool,
    pub indicators: RegimeIndicators,
    pub note: &'static str,
}

/// A growth rate below this is read as "bounded".
const GROWTH_THRESHOLD: f64 = 0.05;

/// Maps asymptotic root behaviour to the regularity table:
/// analytic iff the sector ratio stays bounded; otherwise C-infinity iff
/// `Re lambda_+ -> -infinity`, else C0. Smoothing is split when one real
/// branch stays bounded while the other diverges, instantaneous when
/// `Re lambda_+ -> -infinity`, and asymptotic otherwise. Maximal regularity
/// is flagged exactly in the analytic case.
pub fn classify_regime(gamma: f64, theta: f64, mu_max: f64) -> Result<RegimeReport> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param(format!("theta = {theta} outside [0, 1]")));
    }
    if !(mu_max >= 1e4) {
        return Err(Error::param("classify_regime needs mu_max >= 1e4"));
    }
    let portrait = spectrum_portrait(gamma, theta, mu_max, 401)?;
    // Compare the top decade with the one below it.
    let upper = |p: &&ModePair| p.mu >= mu_max / 10.0;
    let lower = |p: &&ModePair| p.mu >= mu_max / 100.0 && p.mu < mu_max / 10.0;
    let growth = |f: &dyn Fn(&ModePair) -> f64| {
        let hi = portrait.pairs.iter().filter(upper).map(f).fold(0.0, f64::max);
        let lo = portrait.pairs.iter().filter(lower).map(f).fold(0.0, f64::max);
        ((hi + 1e-12) / (lo + 1e-12)).log10()
    };
    let sector_growth = growth(&sector);
    let re_plus_growth = growth(&|p: &ModePair| p.lambda_plus.re.abs());
    let minus_growth = growth(&|p: &ModePair| p.lambda_minus.norm());
    let plus_magnitude_growth = growth(&|p: &ModePair| p.lambda_plus.norm());
    let top = portrait.pairs.last().expect("portrait is nonempty");
    let bounded_branch =
        top.lambda_plus.im == 0.0 && plus_magnitude_growth < GROWTH_THRESHOLD && minus_growth > GROWTH_THRESHOLD;

    let sector_bounded = sector_growth < GROWTH_THRESHOLD;
    let re_diverges = re_plus_growth > GROWTH_THRESHOLD;
    let semigroup_class = if sector_bounded {
        SemigroupClass::Analytic
    } else if re_diverges {
        SemigroupClass::CInfinity
    } else {
        SemigroupClass::C0
    };
    let smoothing = if bounded_branch {
        Smoothing::SplitUV
    } else if re_diverges {
        Smoothing::Instantaneous
    } else {
        Smoothing::Asymptotic
    };
    Ok(RegimeReport {
        gamma,
        theta,
        mu_max,
        semigroup_class,
        smoothing,
        max_regularity: semigroup_class == SemigroupClass::Analytic,
        indicators: RegimeIndicators {
            sup_re: portrait.sup_re,
            sector_ratio: portrait.sector_ratio,
            bounded_branch,
            sector_growth,
            re_plus_growth,
            minus_growth,
        },
        note: "numerical surrogate: classification from root asymptotics over a finite mu range",
    })
}

/// Interval of growth exponents `q`; `hi = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QInterval {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: Option<f64>,
    pub hi_closed: bool,
}

impl QInterval {
    pub fn contains(&self, q: f64) -> bool {
        let above = if self.lo_closed { q >= self.lo } else { q > self.lo };
        let below = match self.hi {
            None => true,
            Some(h) if self.hi_closed => q <= h,
            Some(h) => q < h,
        };
        above && below
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellposednessRange {
    pub theta: f64,
    /// Previously known range; `None` where nothing is known.
    pub prior: Option<QInterval>,
    /// The quintic case `q = 4` is newly covered (`theta = 0` only within the
    /// Shatah-Struwe solution class).
    pub extended_to_quintic: bool,
    pub label: String,
}

impl WellposednessRange {
    pub fn covers(&self, q: f64) -> bool {
        self.prior.is_some_and(|r| r.contains(q)) || (self.extended_to_quintic && q == 4.0)
    }
}

pub fn wellposedness_range(theta: f64) -> Result<WellposednessRange> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param(format!("theta = {theta} outside [0, 1]")));
    }
    let closed = |lo: f64, hi: f64| QInterval {
        lo,
        lo_closed: true,
        hi: Some(hi),
        hi_closed: true,
    };
    let (prior, extended, label) = if theta == 0.0 {
        (
            Some(closed(0.0, 2.0)),
            true,
            "[0,2]; q = 4 in the Shatah-Struwe class".to_string(),
        )
    } else if theta < 0.5 {
        (None, false, "?".to_string())
    } else if theta == 0.5 {
        (
            Some(QInterval {
                hi_closed: false,
                ..closed(0.0, 4.0)
            }),
            true,
            "[0,4); extended to q = 4".to_string(),
        )
    } else if theta < 0.75 {
        let hi = 8.0 * theta / (3.0 - 4.0 * theta);
        (
            Some(QInterval {
                hi_closed: false,
                ..closed(0.0, hi)
            }),
            false,
            format!("[0,{hi:.6})"),
        )
    } else {
        (
            Some(QInterval {
                lo: 0.0,
                lo_closed: false,
                hi: None,
                hi_closed: false,
            }),
            false,
            "(0,inf)".to_string(),
        )
    };
    Ok(WellposednessRange {
        theta,
        prior,
        extended_to_quintic: extended,
        label,
    })
}
