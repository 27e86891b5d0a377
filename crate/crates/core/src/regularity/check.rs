use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigInt;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{RegularityError, RegularityParams};
use crate::bitset::BitSet;
use crate::exact::{rational_str, Rational, Surd};
use crate::graph::{BipartiteGraph, Side, VertexId, VertexSet};
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckConfig {
    pub strategy: Strategy,
    /// Uniform subset pairs drawn by the sampled strategy.
    pub budget: usize,
    /// Largest number of subsets the exhaustive strategy may enumerate.
    pub enumeration_cap: u64,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            strategy: Strategy::Sampled,
            budget: 2000,
            enumeration_cap: 1 << 22,
            seed: 0,
        }
    }
}

impl CheckConfig {
    pub fn exhaustive() -> Self {
        CheckConfig {
            strategy: Strategy::Exhaustive,
            ..CheckConfig::default()
        }
    }

    pub fn sampled(budget: usize, seed: u64) -> Self {
        CheckConfig {
            strategy: Strategy::Sampled,
            budget,
            seed,
            ..CheckConfig::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        CheckConfig {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedRegular,
    CertifiedIrregular,
    /// ε-regular, but the base density is below `d`.
    DensityBelowThreshold,
    CertifiedSuperRegular,
    FailedSuperRegular,
}

/// Subsets `U′ ⊆ U`, `W′ ⊆ W` whose density deviates from `d(U,W)` by more than ε.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub a_side: Vec<usize>,
    pub b_side: Vec<usize>,
    #[serde(with = "rational_str")]
    pub density: Rational,
    #[serde(with = "rational_str")]
    pub deviation: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowDegree {
    pub vertex: VertexId,
    pub degree: usize,
    pub required: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairCertificate {
    #[serde(skip)]
    pub pair: (VertexSet, VertexSet),
    pub params: RegularityParams,
    pub verdict: Verdict,
    #[serde(with = "rational_str")]
    pub base_density: Rational,
    pub witness: Option<Witness>,
    pub low_degree: Option<LowDegree>,
    pub strategy: Strategy,
    pub samples_used: usize,
    pub probes_used: usize,
}

impl PairCertificate {
    /// True when no deviation witness was found (regardless of density).
    pub fn is_epsilon_regular(&self) -> bool {
        self.witness.is_none()
    }

    /// True for the verdicts that license a reduced-graph edge.
    pub fn certifies(&self) -> bool {
        matches!(
            self.verdict,
            Verdict::CertifiedRegular | Verdict::CertifiedSuperRegular
        )
    }
}

/// Deviation `|e·|U||W| − E·s·t| / (s·t·|U||W|)` kept as an integer fraction.
#[derive(Clone, Copy, PartialEq, Eq)]
struct Dev {
    num: u128,
    den: u128,
}

impl Dev {
    fn cmp(&self, o: &Dev) -> Ordering {
        (self.num * o.den).cmp(&(o.num * self.den))
    }
}

/// Integer thresholds: `e(U′,W′)` with `|U′||W′| = st` is a deviation witness
/// iff `e < ⌈(d₀−ε)st⌉` or `e > ⌊(d₀+ε)st⌋`.
struct Bounds<'a> {
    eps: &'a Surd,
    e_total: u64,
    nu: u64,
    nw: u64,
    cache: HashMap<u64, (i64, i64)>,
}

impl<'a> Bounds<'a> {
    fn new(eps: &'a Surd, e_total: u64, nu: u64, nw: u64) -> Self {
        Bounds {
            eps,
            e_total,
            nu,
            nw,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, st: u64) -> (i64, i64) {
        let (eps, e_total, nu, nw) = (self.eps, self.e_total, self.nu, self.nw);
        *self.cache.entry(st).or_insert_with(|| {
            let base = Rational::new(BigInt::from(e_total * st), BigInt::from(nu * nw));
            let spread = eps.scale(&Rational::from_integer(BigInt::from(st)));
            let hi = spread.add_rational(&base).floor();
            let lo = spread.neg().add_rational(&base).ceil();
            (lo, hi)
        })
    }

    fn violates(&mut self, s: usize, t: usize, e: u64) -> bool {
        let (lo, hi) = self.get((s * t) as u64);
        (e as i64) > hi || (e as i64) < lo
    }

    fn deviation(&self, s: usize, t: usize, e: u64) -> Dev {
        let uw = (self.nu * self.nw) as u128;
        let st = (s * t) as u128;
        let lhs = e as u128 * uw;
        let rhs = self.e_total as u128 * st;
        Dev {
            num: lhs.abs_diff(rhs),
            den: st * uw,
        }
    }
}

fn min_size(eps: &Surd, n: usize) -> usize {
    let c = eps.scale(&Rational::from_integer(BigInt::from(n))).ceil();
    (c.max(1) as usize).min(n)
}

fn make_witness(mut a_side: Vec<usize>, mut b_side: Vec<usize>, e: u64, dev: Dev) -> Witness {
    a_side.sort_unstable();
    b_side.sort_unstable();
    let st = (a_side.len() * b_side.len()) as u64;
    Witness {
        a_side,
        b_side,
        density: Rational::new(BigInt::from(e), BigInt::from(st)),
        deviation: Rational::new(BigInt::from(dev.num), BigInt::from(dev.den)),
    }
}

struct Search {
    witness: Option<Witness>,
    samples_used: usize,
    probes_used: usize,
}

fn binomial_tail(m: usize, from: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for s in 0..=m {
        if s >= from {
            total = total.saturating_add(c);
        }
        c = c.saturating_mul((m - s) as u128) / (s as u128 + 1);
    }
    total
}

/// Enumerates every qualifying subset of the smaller side. Witness rule:
/// largest deviation, then largest `|U′|+|W′|`, then first in enumeration
/// order (subset masks ascending, `t` ascending, top before bottom, ties in
/// neighbour count broken by lowest index).
fn exhaustive(
    g: &BipartiteGraph,
    us: &[usize],
    ws: &[usize],
    eps: &Surd,
    bounds: &mut Bounds,
    cap: u64,
) -> Result<Search, RegularityError> {
    let small_is_a = us.len() <= ws.len();
    let (small, large) = if small_is_a { (us, ws) } else { (ws, us) };
    let m = small.len();
    let l = large.len();
    let s_min = min_size(eps, m);
    let t_min = min_size(eps, l);
    let subsets = if m >= 64 {
        u128::MAX
    } else {
        binomial_tail(m, s_min)
    };
    if m >= 64 || subsets > cap as u128 {
        return Err(RegularityError::EnumerationCapExceeded { subsets, cap });
    }
    let masks: Vec<u64> = large
        .iter()
        .map(|&y| {
            small.iter().enumerate().fold(0u64, |acc, (pos, &x)| {
                let adj = if small_is_a {
                    g.has_edge(x, y)
                } else {
                    g.has_edge(y, x)
                };
                acc | (u64::from(adj) << pos)
            })
        })
        .collect();

    // Threshold table indexed by (s, t).
    let mut table = vec![Vec::new(); m + 1];
    for (s, row) in table.iter_mut().enumerate().skip(s_min) {
        *row = (0..=l)
            .map(|t| {
                if t < t_min {
                    (0, 0)
                } else {
                    bounds.get((s * t) as u64)
                }
            })
            .collect::<Vec<_>>();
    }

    struct Best {
        dev: Dev,
        size: usize,
        mask: u64,
        t: usize,
        top: bool,
        e: u64,
    }
    let mut best: Option<Best> = None;
    let mut hist = vec![0usize; m + 1];
    let mut prefix = vec![0u64; l + 1];
    let mut searched = 0usize;
    for mask in 1u64..(1u64 << m) {
        let s = mask.count_ones() as usize;
        if s < s_min {
            continue;
        }
        searched += 1;
        hist[..=s].iter_mut().for_each(|h| *h = 0);
        for &mw in &masks {
            hist[(mw & mask).count_ones() as usize] += 1;
        }
        // Prefix sums of the neighbour counts sorted in decreasing order.
        let mut idx = 0;
        for c in (0..=s).rev() {
            for _ in 0..hist[c] {
                prefix[idx + 1] = prefix[idx] + c as u64;
                idx += 1;
            }
        }
        let total = prefix[l];
        for t in t_min..=l {
            let (lo, hi) = table[s][t];
            for (top, e) in [(true, prefix[t]), (false, total - prefix[l - t])] {
                let ei = e as i64;
                if ei <= hi && ei >= lo {
                    continue;
                }
                let dev = bounds.deviation(s, t, e);
                let better = match &best {
                    None => true,
                    Some(b) => match dev.cmp(&b.dev) {
                        Ordering::Greater => true,
                        Ordering::Equal => s + t > b.size,
                        Ordering::Less => false,
                    },
                };
                if better {
                    best = Some(Best {
                        dev,
                        size: s + t,
                        mask,
                        t,
                        top,
                        e,
                    });
                }
            }
        }
    }

    let witness = best.map(|b| {
        let sel_small: Vec<usize> = (0..m)
            .filter(|&p| b.mask >> p & 1 == 1)
            .map(|p| small[p])
            .collect();
        let mut order: Vec<(u32, usize)> = masks
            .iter()
            .enumerate()
            .map(|(i, &mw)| ((mw & b.mask).count_ones(), i))
            .collect();
        if b.top {
            order.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
        } else {
            order.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
        }
        let sel_large: Vec<usize> = order[..b.t].iter().map(|&(_, i)| large[i]).collect();
        if small_is_a {
            make_witness(sel_small, sel_large, b.e, b.dev)
        } else {
            make_witness(sel_large, sel_small, b.e, b.dev)
        }
    });
    Ok(Search {
        witness,
        samples_used: searched,
        probes_used: 0,
    })
}

/// Picks the `s` members of `pool` with the most (or fewest) neighbours in
/// `target`, ties to lowest index, and returns them with the edge count.
fn extreme_subset(
    rows: impl Fn(usize) -> usize,
    pool: &[usize],
    s: usize,
    top: bool,
) -> (Vec<usize>, u64) {
    let mut scored: Vec<(usize, usize)> = pool.iter().map(|&v| (rows(v), v)).collect();
    if top {
        scored.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    } else {
        scored.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
    }
    let chosen = &scored[..s];
    (
        chosen.iter().map(|&(_, v)| v).collect(),
        chosen.iter().map(|&(c, _)| c as u64).sum(),
    )
}

fn sampled(
    g: &BipartiteGraph,
    us: &[usize],
    ws: &[usize],
    eps: &Surd,
    bounds: &mut Bounds,
    budget: usize,
    seed: u64,
) -> Search {
    let s_min = min_size(eps, us.len());
    let t_min = min_size(eps, ws.len());
    let u_set = BitSet::from_indices(g.size_a(), us.iter().copied());
    let w_set = BitSet::from_indices(g.size_b(), ws.iter().copied());
    let mut probes = 0;

    // Neighbourhood probes seeded at A-side vertices: W′ = N(a)∩W or W∖N(a).
    for &a in us {
        let mut inside = g.row_a(a).clone();
        inside.and_with(&w_set);
        let mut outside = w_set.clone();
        outside.difference_with(g.row_a(a));
        for wp in [inside, outside] {
            let t = wp.count();
            if t < t_min {
                continue;
            }
            for top in [true, false] {
                probes += 1;
                let (sel, e) = extreme_subset(|u| g.row_a(u).count_and(&wp), us, s_min, top);
                if bounds.violates(s_min, t, e) {
                    let dev = bounds.deviation(s_min, t, e);
                    return Search {
                        witness: Some(make_witness(sel, wp.iter().collect(), e, dev)),
                        samples_used: 0,
                        probes_used: probes,
                    };
                }
            }
        }
    }
    // The same from the B side.
    for &b in ws {
        let mut inside = g.row_b(b).clone();
        inside.and_with(&u_set);
        let mut outside = u_set.clone();
        outside.difference_with(g.row_b(b));
        for up in [inside, outside] {
            let s = up.count();
            if s < s_min {
                continue;
            }
            for top in [true, false] {
                probes += 1;
                let (sel, e) = extreme_subset(|w| g.row_b(w).count_and(&up), ws, t_min, top);
                if bounds.violates(s, t_min, e) {
                    let dev = bounds.deviation(s, t_min, e);
                    return Search {
                        witness: Some(make_witness(up.iter().collect(), sel, e, dev)),
                        samples_used: 0,
                        probes_used: probes,
                    };
                }
            }
        }
    }

    let mut rng = rng_for(seed, &[0x5A3D]);
    for i in 0..budget {
        let ui = sample(&mut rng, us.len(), s_min);
        let wi = sample(&mut rng, ws.len(), t_min);
        let wp = BitSet::from_indices(g.size_b(), wi.iter().map(|j| ws[j]));
        let e: u64 = ui
            .iter()
            .map(|j| g.row_a(us[j]).count_and(&wp) as u64)
            .sum();
        if bounds.violates(s_min, t_min, e) {
            let dev = bounds.deviation(s_min, t_min, e);
            return Search {
                witness: Some(make_witness(
                    ui.iter().map(|j| us[j]).collect(),
                    wp.iter().collect(),
                    e,
                    dev,
                )),
                samples_used: i + 1,
                probes_used: probes,
            };
        }
    }
    Search {
        witness: None,
        samples_used: budget,
        probes_used: probes,
    }
}

fn orient<'a>(
    u: &'a VertexSet,
    w: &'a VertexSet,
) -> Result<(&'a VertexSet, &'a VertexSet), RegularityError> {
    if u.side == w.side || u.is_empty() || w.is_empty() {
        return Err(RegularityError::BadPair);
    }
    Ok(if u.side == Side::A { (u, w) } else { (w, u) })
}

/// Certifies `(U, W)` at `params`. The ε-condition is always tested; the
/// verdict is `CertifiedIrregular` when a witness exists, otherwise
/// `DensityBelowThreshold` or `CertifiedRegular` depending on `d(U,W) ≥ d`.
pub fn check_regular_pair(
    g: &BipartiteGraph,
    u: &VertexSet,
    w: &VertexSet,
    params: &RegularityParams,
    cfg: &CheckConfig,
) -> Result<PairCertificate, RegularityError> {
    let (u, w) = orient(u, w)?;
    let us = u.to_vec();
    let ws = w.to_vec();
    let e_total = g.edges_between(u, w)? as u64;
    let base_density = Rational::new(BigInt::from(e_total), BigInt::from(us.len() * ws.len()));
    let mut bounds = Bounds::new(&params.epsilon, e_total, us.len() as u64, ws.len() as u64);
    let search = match cfg.strategy {
        Strategy::Exhaustive => exhaustive(
            g,
            &us,
            &ws,
            &params.epsilon,
            &mut bounds,
            cfg.enumeration_cap,
        )?,
        Strategy::Sampled => sampled(
            g,
            &us,
            &ws,
            &params.epsilon,
            &mut bounds,
            cfg.budget,
            cfg.seed,
        ),
    };
    let verdict = if search.witness.is_some() {
        Verdict::CertifiedIrregular
    } else if params.d.cmp_rational(&base_density).is_gt() {
        Verdict::DensityBelowThreshold
    } else {
        Verdict::CertifiedRegular
    };
    Ok(PairCertificate {
        pair: (u.clone(), w.clone()),
        params: params.clone(),
        verdict,
        base_density,
        witness: search.witness,
        low_degree: None,
        strategy: cfg.strategy,
        samples_used: search.samples_used,
        probes_used: search.probes_used,
    })
}

/// `⌈d·n⌉`, the least integer degree meeting `deg ≥ d·n`.
pub(crate) fn degree_threshold(d: &Surd, n: usize) -> usize {
    d.scale(&Rational::from_integer(BigInt::from(n)))
        .ceil()
        .max(0) as usize
}

/// First vertex (A side first, lowest index) violating the super-regular degree condition.
pub(crate) fn first_low_degree(
    g: &BipartiteGraph,
    u: &VertexSet,
    w: &VertexSet,
    d: &Surd,
) -> Option<LowDegree> {
    let need_u = degree_threshold(d, w.len());
    let need_w = degree_threshold(d, u.len());
    for a in u.iter() {
        let deg = g.row_a(a).count_and(&w.members);
        if deg < need_u {
            return Some(LowDegree {
                vertex: VertexId::a(a),
                degree: deg,
                required: need_u,
            });
        }
    }
    for b in w.iter() {
        let deg = g.row_b(b).count_and(&u.members);
        if deg < need_w {
            return Some(LowDegree {
                vertex: VertexId::b(b),
                degree: deg,
                required: need_w,
            });
        }
    }
    None
}

/// Regular check plus the (always exhaustive) minimum-degree condition
/// `deg_W(u) ≥ d|W|` for every `u ∈ U` and symmetrically.
pub fn check_super_regular_pair(
    g: &BipartiteGraph,
    u: &VertexSet,
    w: &VertexSet,
    params: &RegularityParams,
    cfg: &CheckConfig,
) -> Result<PairCertificate, RegularityError> {
    let mut cert = check_regular_pair(g, u, w, params, cfg)?;
    let (ua, wb) = (&cert.pair.0, &cert.pair.1);
    cert.low_degree = first_low_degree(g, ua, wb, &params.d);
    cert.verdict = if cert.verdict == Verdict::CertifiedRegular && cert.low_degree.is_none() {
        Verdict::CertifiedSuperRegular
    } else {
        Verdict::FailedSuperRegular
    };
    Ok(cert)
}

#[derive(Debug, Clone, Serialize)]
pub struct TypicalReport {
    pub typical: VertexSet,
    /// Least number of neighbours in `B′` a typical vertex has: `⌈(d−ε)|B′|⌉`.
    pub threshold: usize,
    /// Whether `B′ ⊆ B` and `|B′| ≥ ε|B|`; the guarantee only applies then.
    pub precondition_met: bool,
}

/// Vertices of `A` with at least `(d−ε)|B′|` neighbours in `B′`.
pub fn typical_vertices(
    g: &BipartiteGraph,
    a: &VertexSet,
    b: &VertexSet,
    b_prime: &VertexSet,
    params: &RegularityParams,
) -> Result<TypicalReport, RegularityError> {
    if a.side == b.side || b.side != b_prime.side {
        return Err(RegularityError::BadPair);
    }
    let threshold = degree_threshold(&params.d.sub(&params.epsilon), b_prime.len());
    let typical = VertexSet::from_indices(
        a.side,
        a.members.len(),
        a.iter().filter(|&v| {
            let id = VertexId {
                side: a.side,
                index: v,
            };
            g.neighbours(id).count_and(&b_prime.members) >= threshold
        }),
    );
    let large_enough = params
        .epsilon
        .scale(&Rational::from_integer(BigInt::from(b.len())))
        .cmp_rational(&Rational::from_integer(BigInt::from(b_prime.len())))
        .is_le();
    Ok(TypicalReport {
        typical,
        threshold,
        precondition_met: b_prime.members.is_subset(&b.members) && large_enough,
    })
}
