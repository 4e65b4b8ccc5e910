//! Normalised one-dimensional densities tabulated on a node grid.
//!
//! Nodes are equally spaced in a working coordinate w: w = x on uniform grids and
//! w = log(x − origin) on logarithmic grids. Integrals are trapezoid sums in w.

use serde::{Deserialize, Serialize};

use crate::error::{HlikError, Result};
use crate::numeric::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Spacing {
    Uniform,
    Logarithmic { origin: f64 },
}

impl Spacing {
    pub fn to_w(&self, x: f64) -> f64 {
        match self {
            Spacing::Uniform => x,
            Spacing::Logarithmic { origin } => (x - origin).ln(),
        }
    }
    pub fn from_w(&self, w: f64) -> f64 {
        match self {
            Spacing::Uniform => w,
            Spacing::Logarithmic { origin } => origin + w.exp(),
        }
    }
    /// log |dx/dw|
    pub fn log_dxdw(&self, w: f64) -> f64 {
        match self {
            Spacing::Uniform => 0.0,
            Spacing::Logarithmic { .. } => w,
        }
    }
}

/// Grid construction settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nodes: usize,
    /// Probability mass the node range must cover.
    pub coverage: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nodes: 2001,
            coverage: 1.0 - 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub support: Interval,
    pub spacing: Spacing,
    pub nodes: Vec<f64>,
    /// Normalised log density with respect to dx.
    pub log_density: Vec<f64>,
    /// log of the normalising constant that was divided out.
    pub log_normalizer: f64,
}

fn trapezoid(w: &[f64], g: &[f64]) -> Vec<f64> {
    w.windows(2)
        .zip(g.windows(2))
        .map(|(ww, gg)| 0.5 * (ww[1] - ww[0]) * (gg[0] + gg[1]))
        .collect()
}

impl DensityGrid {
    /// Build from unnormalised log densities at the nodes.
    pub fn from_unnormalized(support: Interval, spacing: Spacing, nodes: Vec<f64>, log_unnorm: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != log_unnorm.len() {
            return Err(HlikError::InvalidInput("grid needs ≥ 2 nodes with one value each".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HlikError::InvalidInput("grid nodes must be strictly increasing".into()));
        }
        if log_unnorm.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(HlikError::NonFinite("grid log density".into()));
        }
        let peak = log_unnorm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(HlikError::NonFinite("grid density vanishes everywhere".into()));
        }
        let mut g = Self {
            support,
            spacing,
            nodes,
            log_density: log_unnorm.iter().map(|l| l - peak).collect(),
            log_normalizer: 0.0,
        };
        let mass = g.cell_masses().iter().sum::<f64>();
        let log_z = mass.ln();
        for l in &mut g.log_density {
            *l -= log_z;
        }
        g.log_normalizer = peak + log_z;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.log_density.iter().map(|l| l.exp()).collect()
    }

    fn w_nodes(&self) -> Vec<f64> {
        self.nodes.iter().map(|x| self.spacing.to_w(*x)).collect()
    }

    /// Density with respect to dw at each node.
    fn w_density(&self) -> Vec<f64> {
        self.w_nodes()
            .iter()
            .zip(&self.log_density)
            .map(|(w, l)| (l + self.spacing.log_dxdw(*w)).exp())
            .collect()
    }

    fn cell_masses(&self) -> Vec<f64> {
        trapezoid(&self.w_nodes(), &self.w_density())
    }

    /// Trapezoid mass of the whole grid.
    pub fn mass(&self) -> f64 {
        self.cell_masses().iter().sum()
    }

    /// Cumulative mass at each node.
    pub fn cdf_nodes(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for m in self.cell_masses() {
            acc += m;
            out.push(acc);
        }
        out
    }

    /// Density at x by linear interpolation of the log density in w; 0 off the grid.
    pub fn density_at(&self, x: f64) -> f64 {
        let (first, last) = (self.nodes[0], self.nodes[self.len() - 1]);
        if !(x >= first && x <= last) {
            return 0.0;
        }
        let i = self.nodes.partition_point(|n| *n <= x).clamp(1, self.len() - 1);
        let (w0, w1) = (self.spacing.to_w(self.nodes[i - 1]), self.spacing.to_w(self.nodes[i]));
        let t = (self.spacing.to_w(x) - w0) / (w1 - w0);
        let (l0, l1) = (self.log_density[i - 1], self.log_density[i]);
        if l0 == f64::NEG_INFINITY || l1 == f64::NEG_INFINITY {
            return ((1.0 - t) * l0.exp() + t * l1.exp()).max(0.0);
        }
        ((1.0 - t) * l0 + t * l1).exp()
    }

    /// p-quantile by linear interpolation of the cumulative mass in w.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(HlikError::InvalidInput(format!("probability {p} outside [0, 1]")));
        }
        let cdf = self.cdf_nodes();
        let total = cdf[cdf.len() - 1];
        let target = p * total;
        let i = cdf.partition_point(|c| *c < target).clamp(1, cdf.len() - 1);
        let (c0, c1) = (cdf[i - 1], cdf[i]);
        let (w0, w1) = (self.spacing.to_w(self.nodes[i - 1]), self.spacing.to_w(self.nodes[i]));
        let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        Ok(self.spacing.from_w(w0 + t * (w1 - w0)))
    }

    /// Where log f crosses `log_level` inside cell i, as a fraction of the cell in w,
    /// with log f taken linear in w across the cell.
    fn crossing(&self, i: usize, log_level: f64) -> f64 {
        let (l0, l1) = (self.log_density[i], self.log_density[i + 1]);
        if l0 == f64::NEG_INFINITY || l1 == f64::NEG_INFINITY || l0 == l1 {
            let (f0, f1) = (l0.exp(), l1.exp());
            return ((log_level.exp() - f0) / (f1 - f0)).clamp(0.0, 1.0);
        }
        ((log_level - l0) / (l1 - l0)).clamp(0.0, 1.0)
    }

    /// Mass of cell i between fractions 0 and t, with the w-density log-linear.
    fn partial_mass(&self, i: usize, t: f64, w: &[f64], fw: &[f64]) -> f64 {
        let full = 0.5 * (w[i + 1] - w[i]) * (fw[i] + fw[i + 1]);
        if fw[i] <= 0.0 || fw[i + 1] <= 0.0 {
            return full * t;
        }
        let b = (fw[i + 1] / fw[i]).ln();
        let frac = if b.abs() < 1e-12 { t } else { (b * t).exp_m1() / b.exp_m1() };
        full * frac
    }

    /// Mass of {x : f(x) ≥ level}, splitting cells at the crossing point.
    fn mass_above(&self, level: f64) -> f64 {
        let log_level = level.ln();
        let w = self.w_nodes();
        let fw = self.w_density();
        let mut total = 0.0;
        for i in 0..self.len() - 1 {
            let (a, b) = (self.log_density[i] >= log_level, self.log_density[i + 1] >= log_level);
            let cell = 0.5 * (w[i + 1] - w[i]) * (fw[i] + fw[i + 1]);
            total += match (a, b) {
                (true, true) => cell,
                (false, false) => 0.0,
                (true, false) => self.partial_mass(i, self.crossing(i, log_level), &w, &fw),
                (false, true) => cell - self.partial_mass(i, self.crossing(i, log_level), &w, &fw),
            };
        }
        total
    }

    /// Highest-density set of mass 1 − α as a union of intervals.
    pub fn hdp(&self, alpha: f64) -> Result<HdpInterval> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(HlikError::InvalidInput(format!("α = {alpha} outside (0, 1]")));
        }
        let f = self.densities();
        let target = 1.0 - alpha;
        if target == 0.0 {
            let lo = self.support.lower.max(self.nodes[0]);
            return Ok(HdpInterval {
                level: 0.0,
                lo,
                hi: lo,
                c: Some(0.0),
                pieces: vec![(lo, lo)],
            });
        }
        let (mut lo_t, mut hi_t) = (0.0, f.iter().copied().fold(0.0, f64::max));
        for _ in 0..200 {
            let mid = 0.5 * (lo_t + hi_t);
            if self.mass_above(mid) >= target {
                lo_t = mid;
            } else {
                hi_t = mid;
            }
        }
        let level = lo_t;
        let cross = |i: usize| -> f64 {
            let t = self.crossing(i, level.ln());
            let (w0, w1) = (self.spacing.to_w(self.nodes[i]), self.spacing.to_w(self.nodes[i + 1]));
            self.spacing.from_w(w0 + t * (w1 - w0))
        };
        let mut pieces = Vec::new();
        let mut start: Option<f64> = if f[0] >= level { Some(self.nodes[0]) } else { None };
        for i in 0..self.len() - 1 {
            match (f[i] >= level, f[i + 1] >= level) {
                (false, true) => start = Some(cross(i)),
                (true, false) => pieces.push((start.take().expect("open piece"), cross(i))),
                _ => {}
            }
        }
        if let Some(s) = start {
            pieces.push((s, self.nodes[self.len() - 1]));
        }
        // a piece touching the end of the grid extends to a finite support end
        if let Some(first) = pieces.first_mut() {
            if first.0 == self.nodes[0] && self.support.lower.is_finite() {
                first.0 = self.support.lower;
            }
        }
        if let Some(last) = pieces.last_mut() {
            if last.1 == self.nodes[self.len() - 1] && self.support.upper.is_finite() {
                last.1 = self.support.upper;
            }
        }
        Ok(HdpInterval {
            level: 1.0 - alpha,
            lo: pieces[0].0,
            hi: pieces[pieces.len() - 1].1,
            c: None,
            pieces,
        })
    }

    /// Re-express the grid under a monotone increasing map x ↦ y = g(x), given
    /// log g′(x) at each node.
    pub fn pushforward(&self, support: Interval, spacing: Spacing, g: impl Fn(f64) -> f64, log_dg: impl Fn(f64) -> f64) -> Result<Self> {
        let nodes: Vec<f64> = self.nodes.iter().map(|x| g(*x)).collect();
        let log_unnorm: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.log_density)
            .map(|(x, l)| l - log_dg(*x))
            .collect();
        DensityGrid::from_unnormalized(support, spacing, nodes, log_unnorm)
    }
}

/// Highest-density predictive set. `c` is the closed-form multiplier when one applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HdpInterval {
    pub level: f64,
    pub lo: f64,
    pub hi: f64,
    pub c: Option<f64>,
    /// Union of intervals; a single piece for unimodal densities.
    pub pieces: Vec<(f64, f64)>,
}

impl HdpInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.pieces.iter().any(|(a, b)| x >= *a && x <= *b)
    }

    pub fn width(&self) -> f64 {
        self.pieces.iter().map(|(a, b)| b - a).sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            level: self.level,
            lo: self.lo * k,
            hi: self.hi * k,
            c: self.c,
            pieces: self.pieces.iter().map(|(a, b)| (a * k, b * k)).collect(),
        }
    }
}

/// Locate the maximum of a unimodal log density by bracketing and golden section.
fn maximize_1d(f: &dyn Fn(f64) -> Result<f64>, w0: f64, lo: f64, hi: f64) -> Result<f64> {
    let clamp = |w: f64| w.clamp(lo, hi);
    let w0 = clamp(w0);
    let (f0, f1) = (f(w0)?, f(clamp(w0 + 1.0))?);
    // a is behind b, b is the best point so far, c probes ahead
    let (mut a, mut b, mut fb, dir) = if f1 >= f0 {
        (w0, clamp(w0 + 1.0), f1, 1.0)
    } else {
        (clamp(w0 + 1.0), w0, f0, -1.0)
    };
    let mut step = 1.0;
    let mut c;
    loop {
        c = clamp(b + dir * step);
        let fc = f(c)?;
        if fc < fb || c == b {
            break;
        }
        a = b;
        b = c;
        fb = fc;
        step *= 2.0;
        if step > 1e8 {
            return Err(HlikError::NoInteriorMode("density increases without bound".into()));
        }
    }
    let (mut x0, mut x1) = if a < c { (a, c) } else { (c, a) };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut xa = x1 - g * (x1 - x0);
    let mut xb = x0 + g * (x1 - x0);
    let (mut fxa, mut fxb) = (f(xa)?, f(xb)?);
    while x1 - x0 > 1e-9 * (1.0 + x0.abs().max(x1.abs())) {
        if fxa >= fxb {
            x1 = xb;
            xb = xa;
            fxb = fxa;
            xa = x1 - g * (x1 - x0);
            fxa = f(xa)?;
        } else {
            x0 = xa;
            xa = xb;
            fxa = fxb;
            xb = x0 + g * (x1 - x0);
            fxb = f(xb)?;
        }
    }
    Ok(0.5 * (x0 + x1))
}

/// Tabulate a density given as an unnormalised log density in x.
///
/// Node range: start from a normal approximation at the mode of the density in w and
/// push each end outwards until the density has dropped by e^{-30} relative to the
/// peak and the exponential tail estimate beyond it is below the coverage deficit.
pub fn build_grid(
    support: Interval,
    spacing: Spacing,
    log_f: &(dyn Fn(f64) -> Result<f64> + Sync),
    start: f64,
    spec: &GridSpec,
) -> Result<DensityGrid> {
    if spec.nodes < 3 || !(spec.coverage > 0.0 && spec.coverage < 1.0) {
        return Err(HlikError::InvalidInput("grid needs ≥ 3 nodes and coverage in (0, 1)".into()));
    }
    let (w_lo, w_hi) = match spacing {
        Spacing::Uniform => (support.lower, support.upper),
        Spacing::Logarithmic { origin } => {
            if support.lower < origin {
                return Err(HlikError::InvalidInput("log spacing below its origin".into()));
            }
            (f64::NEG_INFINITY, (support.upper - origin).ln())
        }
    };
    let lw = |w: f64| -> Result<f64> {
        let x = spacing.from_w(w);
        if x.is_infinite() {
            return Err(HlikError::NonConvergent("density mass escapes to infinity".into()));
        }
        let l = log_f(x)?;
        if l.is_nan() {
            return Err(HlikError::NonFinite(format!("log density NaN at {x}")));
        }
        Ok(l + spacing.log_dxdw(w))
    };
    let w0 = spacing.to_w(start);
    let w_start = if w0.is_finite() { w0 } else { 0.0 };
    let inner = |w: f64| {
        if w <= w_lo || w >= w_hi {
            Ok(f64::NEG_INFINITY)
        } else {
            lw(w)
        }
    };
    let mode = maximize_1d(&inner, w_start, w_lo.max(-1e12), w_hi.min(1e12))?;
    let peak = lw(mode)?;
    if !peak.is_finite() {
        return Err(HlikError::NonFinite("log density at the mode".into()));
    }
    let hstep = 1e-3;
    let curv = -(lw(mode + hstep)? - 2.0 * peak + lw(mode - hstep)?) / (hstep * hstep);
    let sd = if curv.is_finite() && curv > 0.0 { curv.sqrt().recip() } else { 1.0 };
    let drop = 30.0;
    let deficit = 0.5 * (1.0 - spec.coverage);

    // exponential tail beyond w: mass ≈ f(w)/|slope|, slope taken outwards
    let tail_ok = |w: f64, dir: f64| -> Result<bool> {
        let l = lw(w)?;
        if l - peak >= -drop {
            return Ok(false);
        }
        if l == f64::NEG_INFINITY {
            return Ok(true);
        }
        let slope = (l - lw(w - dir * 1e-3 * sd)?) / (1e-3 * sd);
        let tail = (l - peak).exp() / slope.abs().max(1e-300);
        Ok(slope < 0.0 && tail / sd < deficit * 1e-2)
    };
    let find_end = |dir: f64, limit: f64| -> Result<f64> {
        let mut step = 8.0 * sd;
        let mut w = mode;
        for _ in 0..200 {
            let next = w + dir * step;
            if (next - mode).abs() > 1e5 * sd {
                break;
            }
            if (dir > 0.0 && next >= limit) || (dir < 0.0 && next <= limit) {
                return Ok(limit);
            }
            if tail_ok(next, dir)? {
                // pull the end back to where the criterion starts to hold
                let (mut inside, mut outside) = (w, next);
                for _ in 0..40 {
                    let mid = 0.5 * (inside + outside);
                    if tail_ok(mid, dir)? {
                        outside = mid;
                    } else {
                        inside = mid;
                    }
                }
                return Ok(outside);
            }
            w = next;
            step *= 1.5;
        }
        Err(HlikError::NonConvergent(
            "density mass could not be captured (tail does not decay)".into(),
        ))
    };
    let a = find_end(-1.0, w_lo)?;
    let b = find_end(1.0, w_hi)?;
    let n = spec.nodes;
    let ws: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let nodes: Vec<f64> = ws.iter().map(|w| spacing.from_w(*w)).collect();
    let log_unnorm: Vec<f64> = nodes.iter().map(|x| log_f(*x)).collect::<Result<_>>()?;
    DensityGrid::from_unnormalized(support, spacing, nodes, log_unnorm)
}

/// Sup-norm and total variation distance of two densities tabulated on the same nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub sup_norm: f64,
    pub total_variation: f64,
}

pub fn distance_on_grid(grid: &DensityGrid, f: &[f64], g: &[f64]) -> Distance {
    let w: Vec<f64> = grid.nodes.iter().map(|x| grid.spacing.to_w(*x)).collect();
    let diff: Vec<f64> = f
        .iter()
        .zip(g)
        .zip(&w)
        .map(|((a, b), wi)| (a - b).abs() * grid.spacing.log_dxdw(*wi).exp())
        .collect();
    Distance {
        sup_norm: f.iter().zip(g).fold(0.0, |m, (a, b)| m.max((a - b).abs())),
        total_variation: 0.5 * trapezoid(&w, &diff).iter().sum::<f64>(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal_grid() -> DensityGrid {
        build_grid(
            Interval::real_line(),
            Spacing::Uniform,
            &|x: f64| Ok(-0.5 * (x - 1.0) * (x - 1.0) / 4.0),
            0.0,
            &GridSpec::default(),
        )
        .unwrap()
    }

    #[test]
    fn normal_density_grid() {
        let g = normal_grid();
        assert!((g.mass() - 1.0).abs() < 1e-12);
        let peak = 1.0 / (2.0 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((g.density_at(1.0) - peak).abs() < 1e-6);
        assert!((g.quantile(0.5).unwrap() - 1.0).abs() < 1e-6);
        let h = g.hdp(0.05).unwrap();
        assert_eq!(h.pieces.len(), 1);
        assert!((h.hi - (1.0 + 2.0 * 1.959964)).abs() < 1e-3, "{h:?}");
        assert!((h.lo - (1.0 - 2.0 * 1.959964)).abs() < 1e-3);
        assert!(g.nodes[0] < 1.0 - 2.0 * 5.6 && g.nodes[g.len() - 1] > 1.0 + 2.0 * 5.6);
    }

    #[test]
    fn exponential_on_log_grid() {
        let g = build_grid(
            Interval::positive_half_line(),
            Spacing::Logarithmic { origin: 0.0 },
            &|x: f64| Ok(-x),
            1.0,
            &GridSpec::default(),
        )
        .unwrap();
        assert!((g.log_normalizer).abs() < 1e-10, "{}", g.log_normalizer);
        assert!((g.density_at(2.0) - (-2.0f64).exp()).abs() < 1e-5);
        let h = g.hdp(0.1).unwrap();
        assert_eq!(h.lo, 0.0);
        assert!((h.hi - 10f64.ln()).abs() < 2e-4, "{h:?}");
        assert!((g.quantile(0.5).unwrap() - 2f64.ln()).abs() < 2e-4);
    }

    #[test]
    fn bimodal_hdp_has_two_pieces() {
        let lf = |x: f64| Ok(((-0.5 * (x + 4.0) * (x + 4.0)).exp() + (-0.5 * (x - 4.0) * (x - 4.0)).exp()).ln());
        let g = build_grid(Interval::real_line(), Spacing::Uniform, &lf, -4.0, &GridSpec::default()).unwrap();
        let h = g.hdp(0.1).unwrap();
        assert_eq!(h.pieces.len(), 2, "{h:?}");
        assert!(h.contains(4.0) && h.contains(-4.0) && !h.contains(0.0));
    }

    #[test]
    fn non_integrable_density_is_reported() {
        let r = build_grid(
            Interval::positive_half_line(),
            Spacing::Logarithmic { origin: 0.0 },
            &|x: f64| Ok(-(1.0 + x).ln()),
            1.0,
            &GridSpec::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn alpha_one_is_degenerate() {
        let h = normal_grid().hdp(1.0).unwrap();
        assert_eq!(h.width(), 0.0);
    }
}
