//! Community-size and degree sequences: samplers, rounding, the intra/inter
//! split, parity repair, and the plain-text sequence file format.

use rand::{Rng as _, RngCore};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution family for a sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// Density proportional to `x^-exponent` on `[min, max]`.
    PowerLaw { exponent: f64 },
    /// Density proportional to `exp(-rate (x - min))` on `[min, max]`.
    Exponential { rate: f64 },
    /// `min + Binomial(max - min, p)`.
    Binomial { p: f64 },
    /// Discrete uniform on `[min, max]`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MixMode {
    #[default]
    Fixed,
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Rounding {
    Nearest,
    #[default]
    Stochastic,
}

fn default_mix_ratio() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    #[serde(flatten)]
    pub family: Family,
    pub min: u32,
    pub max: u32,
    #[serde(default = "default_mix_ratio")]
    pub mix_ratio: f64,
    #[serde(default)]
    pub mix_mode: MixMode,
    #[serde(default)]
    pub rounding: Rounding,
}

impl SamplerConfig {
    pub fn new(family: Family, min: u32, max: u32) -> Self {
        SamplerConfig {
            family,
            min,
            max,
            mix_ratio: default_mix_ratio(),
            mix_mode: MixMode::Fixed,
            rounding: Rounding::Stochastic,
        }
    }

    pub fn uniform(min: u32, max: u32) -> Self {
        Self::new(Family::Uniform, min, max)
    }

    pub fn power_law(exponent: f64, min: u32, max: u32) -> Self {
        Self::new(Family::PowerLaw { exponent }, min, max)
    }

    pub fn with_mix(mut self, ratio: f64, mode: MixMode) -> Self {
        self.mix_ratio = ratio;
        self.mix_mode = mode;
        self
    }

    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = rounding;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min == 0 {
            return Err(Error::Config("sampler minimum must be positive".into()));
        }
        if self.min > self.max {
            return Err(Error::Config(format!(
                "sampler minimum {} exceeds maximum {}",
                self.min, self.max
            )));
        }
        if !(0.0..=1.0).contains(&self.mix_ratio) {
            return Err(Error::Config(format!(
                "mix ratio {} outside [0, 1]",
                self.mix_ratio
            )));
        }
        match self.family {
            Family::PowerLaw { exponent } if !exponent.is_finite() => Err(Error::Config(
                format!("power-law exponent {exponent} is not finite"),
            )),
            Family::Exponential { rate } if !(rate.is_finite() && rate > 0.0) => Err(
                Error::Config(format!("exponential rate {rate} must be positive and finite")),
            ),
            Family::Binomial { p } if !(0.0..=1.0).contains(&p) => Err(Error::Config(format!(
                "binomial success probability {p} outside [0, 1]"
            ))),
            _ => Ok(()),
        }
    }

    /// One integer draw in `[min, max]`.
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> u32 {
        let (lo, hi) = (self.min as f64, self.max as f64);
        let x = match self.family {
            Family::Uniform => return rng.random_range(self.min..=self.max),
            Family::Binomial { p } => {
                let trials = u64::from(self.max - self.min);
                let b = Binomial::new(trials, p).expect("validated binomial parameters");
                return self.min + b.sample(rng) as u32;
            }
            Family::PowerLaw { exponent } => {
                let u: f64 = rng.random();
                if (exponent - 1.0).abs() < 1e-12 {
                    lo * (hi / lo).powf(u)
                } else {
                    let a = 1.0 - exponent;
                    let (la, ha) = (lo.powf(a), hi.powf(a));
                    (la + u * (ha - la)).powf(1.0 / a)
                }
            }
            Family::Exponential { rate } => {
                let u: f64 = rng.random();
                let span = 1.0 - (-rate * (hi - lo)).exp();
                lo - (1.0 - u * span).ln() / rate
            }
        };
        let rounded = round_with(self.rounding, x.clamp(lo, hi), rng);
        (rounded as u32).clamp(self.min, self.max)
    }
}

/// Rounds down with probability `1 - frac(x)` and up otherwise, so the
/// expectation equals `x`.
pub fn stochastic_round<R: RngCore + ?Sized>(x: f64, rng: &mut R) -> u64 {
    debug_assert!(x >= 0.0, "stochastic_round of negative {x}");
    let x = x.max(0.0);
    let floor = x.floor();
    let frac = x - floor;
    let up = frac > 0.0 && rng.random::<f64>() < frac;
    floor as u64 + u64::from(up)
}

pub fn round_with<R: RngCore + ?Sized>(rounding: Rounding, x: f64, rng: &mut R) -> u64 {
    match rounding {
        Rounding::Nearest => x.max(0.0).round() as u64,
        Rounding::Stochastic => stochastic_round(x, rng),
    }
}

/// Multiset of community sizes for one timestep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct CommunitySpec(Vec<u32>);

impl CommunitySpec {
    pub fn new(sizes: Vec<u32>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Validation("community size sequence is empty".into()));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Validation(format!("community {i} has size 0")));
        }
        Ok(CommunitySpec(sizes))
    }

    pub fn sizes(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.0.iter().map(|&s| s as usize).sum()
    }
}

impl TryFrom<Vec<u32>> for CommunitySpec {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        CommunitySpec::new(v)
    }
}

impl From<CommunitySpec> for Vec<u32> {
    fn from(c: CommunitySpec) -> Self {
        c.0
    }
}

/// Bijective total and intra degree sequences. Inter degrees are derived.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSpec {
    total: Vec<u32>,
    intra: Vec<u32>,
}

impl DegreeSpec {
    pub fn new(total: Vec<u32>, intra: Vec<u32>) -> Result<Self> {
        DegreeDraft { total, intra }.validate_into()
    }

    pub fn len(&self) -> usize {
        self.total.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total.is_empty()
    }

    pub fn total(&self) -> &[u32] {
        &self.total
    }

    pub fn intra(&self) -> &[u32] {
        &self.intra
    }

    pub fn inter(&self) -> Vec<u32> {
        self.total
            .iter()
            .zip(&self.intra)
            .map(|(d, e)| d - e)
            .collect()
    }

    /// `(total, intra)` pairs per node slot.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.total.iter().copied().zip(self.intra.iter().copied())
    }
}

/// Degree sequences whose sums may still be odd.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeDraft {
    pub total: Vec<u32>,
    pub intra: Vec<u32>,
}

impl DegreeDraft {
    fn validate_into(self) -> Result<DegreeSpec> {
        let DegreeDraft { total, intra } = self;
        if total.is_empty() {
            return Err(Error::Validation("degree sequence is empty".into()));
        }
        if total.len() != intra.len() {
            return Err(Error::Validation(format!(
                "total and intra sequences differ in length ({} vs {})",
                total.len(),
                intra.len()
            )));
        }
        for (i, (&d, &e)) in total.iter().zip(&intra).enumerate() {
            if d == 0 {
                return Err(Error::Validation(format!("node slot {i} has total degree 0")));
            }
            if e > d {
                return Err(Error::Validation(format!(
                    "node slot {i} has intra degree {e} above total degree {d}"
                )));
            }
        }
        if sum(&total) % 2 == 1 {
            return Err(Error::Validation("total degree sum is odd".into()));
        }
        if sum(&intra) % 2 == 1 {
            return Err(Error::Validation("intra degree sum is odd".into()));
        }
        Ok(DegreeSpec { total, intra })
    }
}

fn sum(v: &[u32]) -> u64 {
    v.iter().map(|&x| u64::from(x)).sum()
}

pub fn sample_sizes<R: RngCore + ?Sized>(
    cfg: &SamplerConfig,
    count: usize,
    rng: &mut R,
) -> Result<CommunitySpec> {
    cfg.validate()?;
    if count == 0 {
        return Err(Error::Config("community count must be positive".into()));
    }
    CommunitySpec::new((0..count).map(|_| cfg.draw(rng)).collect())
}

/// Draws community sizes until they cover exactly `nodes` nodes. The last
/// draw is trimmed; a trimmed remainder below `cfg.min` is spread over
/// communities that are still below `cfg.max`.
pub fn partition_nodes<R: RngCore + ?Sized>(
    cfg: &SamplerConfig,
    nodes: usize,
    rng: &mut R,
) -> Result<CommunitySpec> {
    cfg.validate()?;
    if nodes == 0 {
        return Err(Error::Config("node count must be positive".into()));
    }
    let mut sizes = Vec::new();
    let mut covered = 0usize;
    while covered < nodes {
        let s = cfg.draw(rng) as usize;
        let s = s.min(nodes - covered);
        sizes.push(s as u32);
        covered += s;
    }
    let last = *sizes.last().expect("at least one draw");
    if last < cfg.min && sizes.len() > 1 {
        sizes.pop();
        for _ in 0..last {
            let open: Vec<usize> = (0..sizes.len()).filter(|&i| sizes[i] < cfg.max).collect();
            let i = if open.is_empty() {
                rng.random_range(0..sizes.len())
            } else {
                open[rng.random_range(0..open.len())]
            };
            sizes[i] += 1;
        }
    }
    CommunitySpec::new(sizes)
}

pub fn sample_degrees<R: RngCore + ?Sized>(
    cfg: &SamplerConfig,
    n: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Config("node count must be positive".into()));
    }
    Ok((0..n).map(|_| cfg.draw(rng)).collect())
}

/// Splits total degrees into intra degrees. Sum parities are left to
/// [`fix_parity`].
pub fn split_degrees<R: RngCore + ?Sized>(
    total: &[u32],
    ratio: f64,
    mode: MixMode,
    rounding: Rounding,
    rng: &mut R,
) -> DegreeDraft {
    let ratio = ratio.clamp(0.0, 1.0);
    let intra = total
        .iter()
        .map(|&d| {
            let e = match mode {
                MixMode::Fixed => round_with(rounding, ratio * f64::from(d), rng),
                MixMode::Bernoulli => Binomial::new(u64::from(d), ratio)
                    .expect("ratio clamped to [0, 1]")
                    .sample(rng),
            };
            (e as u32).min(d)
        })
        .collect();
    DegreeDraft {
        total: total.to_vec(),
        intra,
    }
}

/// Makes both degree sums even with single ±1 adjustments: first one intra
/// degree (kept within `[0, d_i]`), then, if the inter sum is still odd, one
/// total degree within `bounds` (and never below its intra degree).
pub fn fix_parity<R: RngCore + ?Sized>(
    mut draft: DegreeDraft,
    bounds: (u32, u32),
    rng: &mut R,
) -> Result<DegreeSpec> {
    if sum(&draft.intra) % 2 == 1 {
        let moves: Vec<(usize, bool)> = draft
            .intra
            .iter()
            .zip(&draft.total)
            .enumerate()
            .flat_map(|(i, (&e, &d))| {
                let up = (e < d).then_some((i, true));
                let down = (e > 0).then_some((i, false));
                up.into_iter().chain(down)
            })
            .collect();
        if moves.is_empty() {
            return Err(Error::Validation(
                "cannot repair odd intra degree sum: every intra degree is at a bound".into(),
            ));
        }
        let (i, up) = moves[rng.random_range(0..moves.len())];
        if up {
            draft.intra[i] += 1;
        } else {
            draft.intra[i] -= 1;
        }
    }
    if sum(&draft.total) % 2 == 1 {
        let (lo, hi) = bounds;
        let moves: Vec<(usize, bool)> = draft
            .total
            .iter()
            .zip(&draft.intra)
            .enumerate()
            .flat_map(|(i, (&d, &e))| {
                let up = (d < hi).then_some((i, true));
                let down = (d > lo.max(e).max(1)).then_some((i, false));
                up.into_iter().chain(down)
            })
            .collect();
        if moves.is_empty() {
            return Err(Error::Validation(
                "cannot repair odd inter degree sum within the degree bounds".into(),
            ));
        }
        let (i, up) = moves[rng.random_range(0..moves.len())];
        if up {
            draft.total[i] += 1;
        } else {
            draft.total[i] -= 1;
        }
    }
    draft.validate_into()
}

/// Sequences for one timestep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSequences {
    pub sizes: CommunitySpec,
    pub degrees: DegreeSpec,
}

impl StepSequences {
    pub fn new(sizes: CommunitySpec, degrees: DegreeSpec) -> Result<Self> {
        if sizes.node_count() != degrees.len() {
            return Err(Error::Validation(format!(
                "community sizes cover {} nodes but {} degree pairs were given",
                sizes.node_count(),
                degrees.len()
            )));
        }
        Ok(StepSequences { sizes, degrees })
    }
}

/// Parses the plain-text sequence format.
///
/// Blocks are separated by blank lines, one block per timestep. The first
/// line of a block lists the community sizes; every following line holds a
/// `total intra` degree pair for one node slot. `#` starts a comment.
///
/// ```text
/// # step 0
/// 4 4 2
/// 4 3
/// 4 3
/// ...
/// ```
pub fn parse_sequence_file(text: &str) -> Result<Vec<StepSequences>> {
    let mut steps = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    let lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .chain(std::iter::once((0, "")));
    for (lineno, line) in lines {
        if line.is_empty() {
            if !block.is_empty() {
                steps.push(parse_block(&block)?);
                block.clear();
            }
            continue;
        }
        block.push((lineno, line));
    }
    if steps.is_empty() {
        return Err(Error::Validation("sequence file holds no timestep".into()));
    }
    Ok(steps)
}

fn parse_block(block: &[(usize, &str)]) -> Result<StepSequences> {
    let parse_u32 = |lineno: usize, tok: &str| {
        tok.parse::<u32>().map_err(|_| {
            Error::Validation(format!("line {lineno}: expected a non-negative integer, got `{tok}`"))
        })
    };
    let (first_no, first) = block[0];
    let sizes = first
        .split_whitespace()
        .map(|t| parse_u32(first_no, t))
        .collect::<Result<Vec<_>>>()?;
    let mut total = Vec::with_capacity(block.len() - 1);
    let mut intra = Vec::with_capacity(block.len() - 1);
    for &(lineno, line) in &block[1..] {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Validation(format!(
                "line {lineno}: expected `total intra`, got `{line}`"
            )));
        }
        total.push(parse_u32(lineno, toks[0])?);
        intra.push(parse_u32(lineno, toks[1])?);
    }
    StepSequences::new(CommunitySpec::new(sizes)?, DegreeSpec::new(total, intra)?)
}

/// Inverse of [`parse_sequence_file`].
pub fn format_sequence_file(steps: &[StepSequences]) -> String {
    let mut out = String::new();
    for (t, step) in steps.iter().enumerate() {
        if t > 0 {
            out.push('\n');
        }
        out.push_str(&format!("# step {t}\n"));
        let sizes: Vec<String> = step.sizes.sizes().iter().map(u32::to_string).collect();
        out.push_str(&sizes.join(" "));
        out.push('\n');
        for (d, e) in step.degrees.pairs() {
            out.push_str(&format!("{d} {e}\n"));
        }
    }
    out
}
