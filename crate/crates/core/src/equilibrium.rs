//! Product equilibrium measures.
//!
//! The equilibrium measure at inverse temperature `β` is the i.i.d. product
//! of the density `g̃(a) = exp(β F(a)) / λ_β`, so cylinder masses factor into
//! one-dimensional integrals and entropy and energy are single integrals
//! against `g̃`.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{Interval, PotentialFamily};
use crate::quadrature::{integrate_with, log_integral_exp, log_partition_on, QuadOptions};
use crate::transfer::EigenData;

/// Nodes of the cumulative table used for sampling.
pub const CDF_NODES: usize = 4096;

/// Five-point Gauss–Legendre rule on `[-1, 1]`.
const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// A finite product `A_1 × … × A_n` of sub-intervals of the domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cylinder {
    boxes: Vec<Interval>,
}

impl Cylinder {
    pub fn new(boxes: Vec<Interval>, domain: Interval) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::Domain("a cylinder needs at least one box".into()));
        }
        for b in &boxes {
            domain.check_contains(b)?;
        }
        Ok(Self { boxes })
    }

    /// From `[[lo, hi], …]` pairs.
    pub fn from_pairs(pairs: &[[f64; 2]], domain: Interval) -> Result<Self> {
        let boxes = pairs
            .iter()
            .map(|[lo, hi]| Interval::new(*lo, *hi))
            .collect::<Result<Vec<_>>>()?;
        Self::new(boxes, domain)
    }

    pub fn boxes(&self) -> &[Interval] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// `self × other`.
    pub fn product(&self, other: &Cylinder) -> Cylinder {
        let mut boxes = self.boxes.clone();
        boxes.extend_from_slice(&other.boxes);
        Cylinder { boxes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum MarginalKind {
    /// The equilibrium marginal `g̃`.
    Tilde,
    /// The eigenmeasure marginal with density `exp(β Σ_{i≤n} f_i) / λ_β`.
    Plain(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalSpec {
    pub kind: MarginalKind,
    pub beta: f64,
}

impl MarginalSpec {
    pub fn tilde(beta: f64) -> Self {
        Self {
            kind: MarginalKind::Tilde,
            beta,
        }
    }

    pub fn plain(n: usize, beta: f64) -> Self {
        Self {
            kind: MarginalKind::Plain(n),
            beta,
        }
    }

    /// Log density at `a` relative to a given `log λ_β`.
    pub fn log_density(&self, family: &PotentialFamily, log_lambda: f64, a: f64) -> Result<f64> {
        let energy = match self.kind {
            MarginalKind::Tilde => family.summed(a)?.value,
            MarginalKind::Plain(n) => partial_factor_sum(family, n, a)?,
        };
        Ok(self.beta * energy - log_lambda)
    }
}

fn partial_factor_sum(family: &PotentialFamily, n: usize, a: f64) -> Result<f64> {
    (1..=n).map(|i| family.factor(i, a)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderMass {
    /// `log μ̃_β(D)`.
    pub log_mass: f64,
    /// `log μ̃_β(A_j)` for each box.
    pub per_box: Vec<f64>,
    pub log_error: f64,
}

/// `log μ̃_β(D) = Σ_j (log ∫_{A_j} exp(β F) - log λ_β)`.
pub fn cylinder_mass(
    family: &PotentialFamily,
    beta: f64,
    cylinder: &Cylinder,
    opts: &QuadOptions,
) -> Result<CylinderMass> {
    let eigen = EigenData::compute(family, beta, opts)?;
    cylinder_mass_with(family, &eigen, cylinder, opts)
}

pub fn cylinder_mass_with(
    family: &PotentialFamily,
    eigen: &EigenData,
    cylinder: &Cylinder,
    opts: &QuadOptions,
) -> Result<CylinderMass> {
    let mut per_box = Vec::with_capacity(cylinder.len());
    let mut log_error = 0.0;
    for b in cylinder.boxes() {
        let part = log_partition_on(family, eigen.beta, *b, opts)?;
        per_box.push(part.log_value - eigen.log_lambda);
        log_error += part.log_error() + eigen.log_lambda_error;
    }
    Ok(CylinderMass {
        log_mass: per_box.iter().sum(),
        per_box,
        log_error,
    })
}

/// `max_a |log g̃(a) - β T_j(a) - log ρ_j(a)|` over the probes, where
/// `ρ_j = exp(β Σ_{i≤j} f_i - log λ_β)` is the `j`-th eigenmeasure marginal.
pub fn marginal_relation_residual(
    family: &PotentialFamily,
    beta: f64,
    j: usize,
    probes: &[f64],
    opts: &QuadOptions,
) -> Result<f64> {
    let eigen = EigenData::compute(family, beta, opts)?;
    let tilde = MarginalSpec::tilde(beta);
    let plain = MarginalSpec::plain(j, beta);
    let mut worst: f64 = 0.0;
    for &a in probes {
        let lhs = tilde.log_density(family, eigen.log_lambda, a)? - beta * family.tail(j, a)?.value;
        let rhs = plain.log_density(family, eigen.log_lambda, a)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Inverse-CDF sampler for a marginal, backed by a cumulative table that is
/// built once on first use.
#[derive(Debug)]
pub struct MarginalSampler {
    family: PotentialFamily,
    spec: MarginalSpec,
    table: OnceLock<Result<CdfTable>>,
}

#[derive(Debug, Clone)]
struct CdfTable {
    nodes: Vec<f64>,
    /// Normalized cumulative mass at each node, from 0 to 1.
    cdf: Vec<f64>,
}

impl MarginalSampler {
    pub fn new(family: PotentialFamily, spec: MarginalSpec) -> Self {
        Self {
            family,
            spec,
            table: OnceLock::new(),
        }
    }

    fn table(&self) -> Result<&CdfTable> {
        self.table
            .get_or_init(|| build_table(&self.family, &self.spec))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `count` independent draws, deterministic in `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<f64>> {
        let table = self.table()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count).map(|_| table.invert(rng.gen::<f64>())).collect())
    }

    /// Cumulative distribution at `a`, by interpolation in the table.
    pub fn cdf(&self, a: f64) -> Result<f64> {
        let table = self.table()?;
        let a = self.family.domain().check(a)?;
        let k = table.nodes.partition_point(|&x| x <= a).clamp(1, table.nodes.len() - 1);
        let (x0, x1) = (table.nodes[k - 1], table.nodes[k]);
        let t = ((a - x0) / (x1 - x0)).clamp(0.0, 1.0);
        Ok(table.cdf[k - 1] + t * (table.cdf[k] - table.cdf[k - 1]))
    }
}

fn build_table(family: &PotentialFamily, spec: &MarginalSpec) -> Result<CdfTable> {
    let domain = family.domain();
    let nodes = domain.grid(CDF_NODES);
    // shift by the largest value seen on the nodes; the normalization below
    // removes it again
    let logs = nodes
        .iter()
        .map(|&a| spec.log_density(family, 0.0, a))
        .collect::<Result<Vec<f64>>>()?;
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut cdf = Vec::with_capacity(nodes.len());
    cdf.push(0.0);
    let mut total = 0.0;
    for w in nodes.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (lo + hi);
        let mut cell = 0.0;
        for (x, wt) in GL5_X.iter().zip(GL5_W) {
            let a = (mid + half * x).clamp(domain.lo, domain.hi);
            cell += wt * (spec.log_density(family, 0.0, a)? - shift).exp();
        }
        total += cell * half;
        cdf.push(total);
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Domain(format!("marginal table has mass {total}")));
    }
    for c in &mut cdf {
        *c /= total;
    }
    *cdf.last_mut().expect("nonempty table") = 1.0;
    Ok(CdfTable { nodes, cdf })
}

impl CdfTable {
    /// Piecewise-linear inverse of the cumulative table.
    fn invert(&self, u: f64) -> f64 {
        let k = self
            .cdf
            .partition_point(|&c| c <= u)
            .clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let (x0, x1) = (self.nodes[k - 1], self.nodes[k]);
        if c1 > c0 {
            x0 + (u - c0) / (c1 - c0) * (x1 - x0)
        } else {
            x0
        }
    }
}

fn peak_cuts(family: &PotentialFamily) -> Result<Vec<f64>> {
    Ok(family
        .landscape()?
        .candidates
        .iter()
        .map(|c| c.location)
        .collect())
}

/// Entropy of the equilibrium marginal relative to Lebesgue measure,
/// `-∫ g̃ log g̃`, which equals `log λ_β - β ∫ F g̃`.
pub fn entropy(family: &PotentialFamily, beta: f64, opts: &QuadOptions) -> Result<f64> {
    let eigen = EigenData::compute(family, beta, opts)?;
    entropy_with(family, &eigen, opts)
}

fn entropy_with(family: &PotentialFamily, eigen: &EigenData, opts: &QuadOptions) -> Result<f64> {
    let cuts = peak_cuts(family)?;
    let r = integrate_with(
        |a| {
            let l = eigen.log_density(family, a)?;
            let p = l.exp();
            Ok(if p == 0.0 { 0.0 } else { -p * l })
        },
        family.domain(),
        &cuts,
        opts,
    )?;
    Ok(r.value)
}

/// `∫ F g̃`, normalized by its own quadrature of `exp(β (F - max F))`.
pub fn mean_f(family: &PotentialFamily, beta: f64, opts: &QuadOptions) -> Result<f64> {
    let landscape = family.landscape()?;
    let shift = landscape.max_value;
    let cuts = peak_cuts(family)?;
    let domain = family.domain();
    let weight = |a: f64| -> Result<(f64, f64)> {
        let f = family.summed(a)?.value;
        Ok((f, (beta * (f - shift)).exp()))
    };
    let mass = integrate_with(|a| Ok(weight(a)?.1), domain, &cuts, opts)?;
    // centring F at its maximum keeps the numerator free of cancellation
    let moment = integrate_with(
        |a| {
            let (f, w) = weight(a)?;
            Ok((f - shift) * w)
        },
        domain,
        &cuts,
        opts,
    )?;
    Ok(shift + moment.value / mass.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationalReport {
    pub beta: f64,
    pub log_lambda: f64,
    pub entropy: f64,
    pub mean_f: f64,
    /// `|log λ_β - entropy - β mean_f|`.
    pub residual: f64,
    /// Whether `f` is known to be Lipschitz for the product metric; the
    /// explicit formula is evaluated either way.
    pub lipschitz_potential: bool,
}

pub fn variational_residual(
    family: &PotentialFamily,
    beta: f64,
    opts: &QuadOptions,
) -> Result<VariationalReport> {
    let eigen = EigenData::compute(family, beta, opts)?;
    let h = entropy_with(family, &eigen, opts)?;
    let m = mean_f(family, beta, opts)?;
    Ok(VariationalReport {
        beta,
        log_lambda: eigen.log_lambda,
        entropy: h,
        mean_f: m,
        residual: (eigen.log_lambda - h - beta * m).abs(),
        lipschitz_potential: family.geometric_lipschitz_constant().is_some(),
    })
}

/// `log ∫_A exp(β F) - log λ_β` computed from scratch with a plain shift by
/// `max F`, used as an independent check of box masses.
pub fn box_log_mass_unrefined(
    family: &PotentialFamily,
    beta: f64,
    sub: Interval,
    opts: &QuadOptions,
) -> Result<f64> {
    let shift = family.landscape()?.max_value;
    let g = |a: f64| family.summed(a).map(|e| e.value);
    let num = log_integral_exp(g, beta, sub, shift, &[], opts)?;
    let den = log_integral_exp(g, beta, family.domain(), shift, &[], opts)?;
    Ok(num.log_value - den.log_value)
}
