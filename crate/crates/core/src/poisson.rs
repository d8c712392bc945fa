//! Marked Poisson target fields in the plane.
//!
//! `p1` is the longitudinal coordinate (the direction of constant-speed
//! travel) and `p2` the lateral one. Fields are generated on a bounded region:
//! the reachable cone of a robot starting at the apex, or an axis-aligned
//! rectangle. [`TiledPoissonField`] covers the half-plane `p1 >= 0` lazily for
//! runs whose length is not known in advance.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex};

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::distribution::RewardDistribution;
use crate::error::{Error, Result};
use crate::rng::{mix64, SeededRng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub p1: f64,
    pub p2: f64,
    pub reward: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    /// `0 <= p1 <= length`, `|p2 - apex| <= alpha * p1`.
    Cone { length: f64, alpha: f64, apex: f64 },
    /// `p1_min <= p1 <= p1_max`, `p2_min <= p2 <= p2_max`.
    Rect { p1_min: f64, p1_max: f64, p2_min: f64, p2_max: f64 },
}

impl Region {
    pub fn cone(length: f64, alpha: f64) -> Self {
        Region::Cone { length, alpha, apex: 0.0 }
    }

    /// `0 <= p1 <= length`, `|p2| <= half_width`.
    pub fn strip(length: f64, half_width: f64) -> Self {
        Region::Rect { p1_min: 0.0, p1_max: length, p2_min: -half_width, p2_max: half_width }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Region::Cone { length, alpha, .. } => alpha * length * length,
            Region::Rect { p1_min, p1_max, p2_min, p2_max } => (p1_max - p1_min).max(0.0) * (p2_max - p2_min).max(0.0),
        }
    }

    pub fn contains(&self, p1: f64, p2: f64) -> bool {
        match *self {
            Region::Cone { length, alpha, apex } => (0.0..=length).contains(&p1) && (p2 - apex).abs() <= alpha * p1,
            Region::Rect { p1_min, p1_max, p2_min, p2_max } => {
                (p1_min..=p1_max).contains(&p1) && (p2_min..=p2_max).contains(&p2)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Region::Cone { length, alpha, apex } => {
                length >= 0.0 && alpha > 0.0 && length.is_finite() && apex.is_finite()
            }
            Region::Rect { p1_min, p1_max, p2_min, p2_max } => {
                [p1_min, p1_max, p2_min, p2_max].iter().all(|x| x.is_finite()) && p1_min <= p1_max && p2_min <= p2_max
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid region {self:?}")))
        }
    }

    /// Uniform point from two uniforms on `[0, 1)`.
    fn position(&self, u1: f64, u2: f64) -> (f64, f64) {
        match *self {
            Region::Cone { length, alpha, apex } => {
                // p1 has density proportional to p1 on [0, length]
                let p1 = length * u1.sqrt();
                (p1, apex + alpha * p1 * (2.0 * u2 - 1.0))
            }
            Region::Rect { p1_min, p1_max, p2_min, p2_max } => {
                (p1_min + (p1_max - p1_min) * u1, p2_min + (p2_max - p2_min) * u2)
            }
        }
    }

    /// Image under `(p1, p2) -> (p1, p2 / scale)`.
    fn squeezed(&self, scale: f64) -> Region {
        match *self {
            Region::Cone { length, alpha, apex } => Region::Cone { length, alpha: alpha / scale, apex: apex / scale },
            Region::Rect { p1_min, p1_max, p2_min, p2_max } => {
                Region::Rect { p1_min, p1_max, p2_min: p2_min / scale, p2_max: p2_max / scale }
            }
        }
    }
}

/// Draws `Poisson(mean)`; zero for a non-positive mean.
pub(crate) fn poisson_count(mean: f64, rng: &mut SeededRng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
}

/// A finite marked Poisson field, targets sorted by strictly increasing `p1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedPointField {
    pub lambda: f64,
    pub region: Region,
    pub dist: RewardDistribution,
    pub seed: u64,
    pub stream: u64,
    /// Number of positions re-drawn to break exact `p1` ties.
    pub redraws: usize,
    targets: Vec<Target>,
}

impl MarkedPointField {
    /// Samples a field: `N ~ Poisson(lambda * area)`, then `N` uniform
    /// positions, then `N` i.i.d. marks.
    ///
    /// Positions come from `rng.substream(0)` and marks from
    /// `rng.substream(1)`, so two fields generated from the same `rng` with
    /// different reward laws share their target positions.
    pub fn generate(lambda: f64, region: Region, dist: RewardDistribution, rng: &SeededRng) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("intensity must be positive, got {lambda}")));
        }
        region.validate()?;
        let mut pos_rng = rng.substream(0);
        let n = poisson_count(lambda * region.area(), &mut pos_rng);
        let mut pts: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let u1 = pos_rng.uniform();
                let u2 = pos_rng.uniform();
                region.position(u1, u2)
            })
            .collect();
        let mut redraws = 0;
        loop {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let dup = (1..pts.len()).find(|&i| pts[i].0 == pts[i - 1].0);
            match dup {
                Some(i) => {
                    let u1 = pos_rng.uniform();
                    let u2 = pos_rng.uniform();
                    pts[i] = region.position(u1, u2);
                    redraws += 1;
                }
                None => break,
            }
        }
        let mut mark_rng = rng.substream(1);
        let targets = pts.into_iter().map(|(p1, p2)| Target { p1, p2, reward: dist.sample(&mut mark_rng) }).collect();
        Ok(Self { lambda, region, dist, seed: rng.seed(), stream: rng.stream_id(), redraws, targets })
    }

    /// Builds a field from explicit targets, sorting them by `p1`.
    pub fn from_targets(
        lambda: f64,
        region: Region,
        dist: RewardDistribution,
        mut targets: Vec<Target>,
    ) -> Result<Self> {
        targets.sort_by(|a, b| a.p1.total_cmp(&b.p1));
        if targets.windows(2).any(|w| w[0].p1 == w[1].p1) {
            return Err(Error::InvalidArgument("targets must have distinct p1".into()));
        }
        if targets.iter().any(|t| !(t.reward >= 0.0) || !t.p1.is_finite() || !t.p2.is_finite()) {
            return Err(Error::InvalidArgument("targets need finite positions and non-negative rewards".into()));
        }
        Ok(Self { lambda, region, dist, seed: 0, stream: 0, redraws: 0, targets })
    }

    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// The image of this field under `p2 -> p2 / alpha`: a Poisson field of
    /// intensity `alpha * lambda`. Rewards are unchanged.
    pub fn agility_transform(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("agility must be positive, got {alpha}")));
        }
        let targets = self.targets.iter().map(|t| Target { p2: t.p2 / alpha, ..*t }).collect();
        Ok(Self { lambda: self.lambda * alpha, region: self.region.squeezed(alpha), targets, ..self.clone() })
    }

    /// Targets with `x1 <= p1 <= x1 + range`, in `p1` order. `range` may be
    /// infinite.
    pub fn visible_targets(&self, x1: f64, range: f64) -> &[Target] {
        let lo = self.targets.partition_point(|t| t.p1 < x1);
        let hi = self.targets.partition_point(|t| t.p1 <= x1 + range);
        &self.targets[lo..hi.max(lo)]
    }

    /// Writes `# <json header>` followed by `p1,p2,reward` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header = FieldHeader {
            lambda: self.lambda,
            region: self.region,
            dist: self.dist.to_string(),
            seed: self.seed,
            stream: self.stream,
            redraws: self.redraws,
        };
        writeln!(w, "# {}", serde_json::to_string(&header)?)?;
        writeln!(w, "p1,p2,reward")?;
        let mut line = String::new();
        for t in &self.targets {
            line.clear();
            let _ = write!(line, "{},{},{}", t.p1, t.p2, t.reward);
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines.next().ok_or_else(|| Error::Format("empty field file".into()))??;
        let json = first.strip_prefix("# ").ok_or_else(|| Error::Format("missing JSON header line".into()))?;
        let header: FieldHeader = serde_json::from_str(json)?;
        let cols = lines.next().ok_or_else(|| Error::Format("missing column header".into()))??;
        if cols.trim() != "p1,p2,reward" {
            return Err(Error::Format(format!("unexpected columns `{cols}`")));
        }
        let mut targets = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Format(format!("bad number in `{line}`"))))
                .collect::<Result<_>>()?;
            if vals.len() != 3 {
                return Err(Error::Format(format!("expected 3 columns in `{line}`")));
            }
            targets.push(Target { p1: vals[0], p2: vals[1], reward: vals[2] });
        }
        let dist = header.dist.parse()?;
        let mut field = Self::from_targets(header.lambda, header.region, dist, targets)?;
        field.seed = header.seed;
        field.stream = header.stream;
        field.redraws = header.redraws;
        Ok(field)
    }
}

#[derive(Serialize, Deserialize)]
struct FieldHeader {
    lambda: f64,
    region: Region,
    dist: String,
    seed: u64,
    stream: u64,
    redraws: usize,
}

/// Read access to targets in an axis-aligned window.
pub trait TargetSource {
    /// Targets with `p1_lo <= p1 <= p1_hi` and `p2_lo <= p2 <= p2_hi`, sorted
    /// by `p1`.
    fn window(&self, p1_lo: f64, p1_hi: f64, p2_lo: f64, p2_hi: f64) -> Vec<Target>;
}

impl TargetSource for MarkedPointField {
    fn window(&self, p1_lo: f64, p1_hi: f64, p2_lo: f64, p2_hi: f64) -> Vec<Target> {
        self.visible_targets(p1_lo, p1_hi - p1_lo).iter().filter(|t| t.p2 >= p2_lo && t.p2 <= p2_hi).copied().collect()
    }
}

type Tile = Arc<Vec<Target>>;

/// Poisson field on the half-plane `p1 >= 0`, generated one tile at a time.
///
/// Tile `(i, j)` covers `[i * depth, (i + 1) * depth) x [j * width, (j + 1) * width)`
/// and is drawn from a stream keyed by `(seed, i, j)`, so a tile is identical
/// however often and in whatever order it is requested. Generated tiles are
/// cached behind a mutex; concurrent requests for one tile generate it once.
#[derive(Debug)]
pub struct TiledPoissonField {
    lambda: f64,
    dist: RewardDistribution,
    depth: f64,
    width: f64,
    rng: SeededRng,
    cache: Mutex<BTreeMap<(u64, i64), Tile>>,
}

impl TiledPoissonField {
    pub fn new(lambda: f64, dist: RewardDistribution, depth: f64, width: f64, rng: &SeededRng) -> Result<Self> {
        if !(lambda > 0.0 && depth > 0.0 && width > 0.0) || !(depth.is_finite() && width.is_finite()) {
            return Err(Error::InvalidArgument("tiled field needs positive intensity, depth and width".into()));
        }
        Ok(Self { lambda, dist, depth, width, rng: rng.clone(), cache: Mutex::new(BTreeMap::new()) })
    }

    fn tile(&self, i: u64, j: i64) -> Tile {
        let mut cache = self.cache.lock().expect("tile cache poisoned");
        cache
            .entry((i, j))
            .or_insert_with(|| {
                let key = mix64(i.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ mix64(j as u64));
                let rng = self.rng.substream(key);
                let region = Region::Rect {
                    p1_min: i as f64 * self.depth,
                    p1_max: (i + 1) as f64 * self.depth,
                    p2_min: j as f64 * self.width,
                    p2_max: (j + 1) as f64 * self.width,
                };
                let field = MarkedPointField::generate(self.lambda, region, self.dist, &rng).expect("valid tile");
                // half-open tiles: the closing edges belong to the neighbours
                Arc::new(
                    field
                        .targets
                        .into_iter()
                        .filter(|t| t.p1 < (i + 1) as f64 * self.depth && t.p2 < (j + 1) as f64 * self.width)
                        .collect(),
                )
            })
            .clone()
    }

    /// Drops cached tiles lying entirely before `p1`.
    pub fn evict_before(&self, p1: f64) {
        let keep_from = (p1 / self.depth).floor().max(0.0) as u64;
        let mut cache = self.cache.lock().expect("tile cache poisoned");
        cache.retain(|&(i, _), _| i >= keep_from);
    }

    pub fn cached_tiles(&self) -> usize {
        self.cache.lock().expect("tile cache poisoned").len()
    }
}

impl TargetSource for TiledPoissonField {
    fn window(&self, p1_lo: f64, p1_hi: f64, p2_lo: f64, p2_hi: f64) -> Vec<Target> {
        let p1_lo = p1_lo.max(0.0);
        if !(p1_hi >= p1_lo) || !(p2_hi >= p2_lo) {
            return Vec::new();
        }
        let i0 = (p1_lo / self.depth).floor() as u64;
        let i1 = (p1_hi / self.depth).floor() as u64;
        let j0 = (p2_lo / self.width).floor() as i64;
        let j1 = (p2_hi / self.width).floor() as i64;
        let mut out: Vec<Target> = Vec::new();
        for i in i0..=i1 {
            for j in j0..=j1 {
                out.extend(
                    self.tile(i, j)
                        .iter()
                        .filter(|t| t.p1 >= p1_lo && t.p1 <= p1_hi && t.p2 >= p2_lo && t.p2 <= p2_hi)
                        .copied(),
                );
            }
        }
        out.sort_by(|a, b| a.p1.total_cmp(&b.p1));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> RewardDistribution {
        RewardDistribution::exponential(1.0).unwrap()
    }

    #[test]
    fn tiny_intensity_gives_empty_field() {
        let empty = (0..100)
            .filter(|&s| {
                MarkedPointField::generate(1e-9, Region::strip(1.0, 0.5), exp1(), &SeededRng::new(s, 0))
                    .unwrap()
                    .is_empty()
            })
            .count();
        assert_eq!(empty, 100);
    }

    #[test]
    fn zero_area_region_is_empty() {
        let f = MarkedPointField::generate(5.0, Region::strip(0.0, 1.0), exp1(), &SeededRng::new(0, 0)).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn invalid_inputs() {
        assert!(MarkedPointField::generate(0.0, Region::strip(1.0, 1.0), exp1(), &SeededRng::new(0, 0)).is_err());
        assert!(MarkedPointField::generate(1.0, Region::cone(1.0, -1.0), exp1(), &SeededRng::new(0, 0)).is_err());
    }

    #[test]
    fn targets_inside_region_and_sorted() {
        for region in [Region::cone(20.0, 1.5), Region::strip(10.0, 3.0)] {
            let f = MarkedPointField::generate(2.0, region, exp1(), &SeededRng::new(9, 1)).unwrap();
            assert!(!f.is_empty());
            for t in f.targets() {
                assert!(region.contains(t.p1, t.p2));
                assert!(t.reward >= 0.0);
            }
            assert!(f.targets().windows(2).all(|w| w[0].p1 < w[1].p1));
        }
    }

    #[test]
    fn cone_area_closed_form() {
        assert_eq!(Region::cone(10.0, 2.0).area(), 200.0);
        assert_eq!(Region::strip(10.0, 2.0).area(), 40.0);
    }

    #[test]
    fn visible_is_interval_membership() {
        let f = MarkedPointField::from_targets(
            1.0,
            Region::strip(4.0, 1.0),
            exp1(),
            vec![
                Target { p1: 1.0, p2: 0.0, reward: 1.0 },
                Target { p1: 2.0, p2: 0.0, reward: 1.0 },
                Target { p1: 3.0, p2: 0.0, reward: 1.0 },
            ],
        )
        .unwrap();
        let v = f.visible_targets(1.5, 1.0);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].p1, 2.0);
        assert_eq!(f.visible_targets(1.5, f64::INFINITY).len(), 2);
        assert_eq!(f.visible_targets(0.0, f64::INFINITY).len(), 3);
        assert_eq!(f.visible_targets(1.0, 2.0).len(), 3);
    }

    #[test]
    fn agility_transform_geometry() {
        let f = MarkedPointField::generate(1.0, Region::cone(10.0, 2.0), exp1(), &SeededRng::new(1, 0)).unwrap();
        let g = f.agility_transform(2.0).unwrap();
        assert_eq!(g.region, Region::cone(10.0, 1.0));
        assert_eq!(g.lambda, 2.0);
        assert_eq!(g.len(), f.len());
        for (a, b) in f.targets().iter().zip(g.targets()) {
            assert_eq!(a.p1, b.p1);
            assert_eq!(a.reward, b.reward);
            assert!(g.region.contains(b.p1, b.p2));
        }
        assert_eq!(f.agility_transform(1.0).unwrap().targets(), f.targets());
        assert!(f.agility_transform(0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let f = MarkedPointField::generate(1.0, Region::cone(5.0, 1.0), exp1(), &SeededRng::new(3, 4)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# {"));
        assert_eq!(text.lines().nth(1), Some("p1,p2,reward"));
        let g = MarkedPointField::read_csv(&buf[..]).unwrap();
        assert_eq!(f, g);
        assert!(MarkedPointField::read_csv(&b"p1,p2,reward\n"[..]).is_err());
    }

    #[test]
    fn shared_positions_across_mark_laws() {
        let rng = SeededRng::new(12, 0);
        let a = MarkedPointField::generate(1.0, Region::cone(10.0, 1.0), exp1(), &rng).unwrap();
        let c = RewardDistribution::constant(1.0).unwrap();
        let b = MarkedPointField::generate(1.0, Region::cone(10.0, 1.0), c, &rng).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.targets().iter().zip(b.targets()) {
            assert_eq!((x.p1, x.p2), (y.p1, y.p2));
            assert_eq!(y.reward, 1.0);
        }
    }

    #[test]
    fn tiles_are_reproducible_and_consistent() {
        let rng = SeededRng::new(5, 5);
        let a = TiledPoissonField::new(1.0, exp1(), 2.0, 3.0, &rng).unwrap();
        let b = TiledPoissonField::new(1.0, exp1(), 2.0, 3.0, &rng).unwrap();
        // b sees the tiles in a different order
        let _ = b.window(6.0, 9.0, -4.0, 4.0);
        let wa = a.window(0.0, 10.0, -5.0, 5.0);
        let wb = b.window(0.0, 10.0, -5.0, 5.0);
        assert_eq!(wa, wb);
        // a sub-window is the filtered window
        let sub = a.window(2.5, 7.5, -1.0, 2.0);
        let filt: Vec<Target> =
            wa.iter().filter(|t| t.p1 >= 2.5 && t.p1 <= 7.5 && t.p2 >= -1.0 && t.p2 <= 2.0).copied().collect();
        assert_eq!(sub, filt);
        assert!(a.cached_tiles() > 0);
        a.evict_before(6.0);
        assert!(a.window(0.0, 10.0, -5.0, 5.0) == wa);
    }
}
