//! Christ-type dyadic cubes of a geodesic ball.
//!
//! Generation `j` is a `δ₀^j`-separated net built greedily from a Halton
//! stream, and nets are nested: the net of generation `j` is a prefix of the
//! point list of generation `j + 1`. Every point of generation `j + 1` takes
//! the nearest point of generation `j` as parent. A domain point belongs to
//! the cube `Q_α^j` when the nearest point of the finest net descends from
//! `α`, which makes nesting, uniqueness and coverage exact.

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, Point};
use crate::numeric::binomial_half_width;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

/// Cube identifier `(j, α)`; `α` indexes the shared point list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeId {
    pub generation: i32,
    pub index: usize,
}

/// The spatial hash works on coordinate distance, which is exact in flat
/// space, the chord on the unit sphere, and a lower bound in graph charts.
#[derive(Clone, Copy, Debug)]
enum Proxy {
    Exact,
    Chord { k: f64 },
    LowerBound,
}

impl Proxy {
    fn of(m: &ManifoldModel) -> Self {
        match *m {
            ManifoldModel::Euclidean { .. } => Proxy::Exact,
            ManifoldModel::Sphere { curvature, .. } => Proxy::Chord { k: curvature.sqrt() },
            ManifoldModel::Revolution { .. } => Proxy::LowerBound,
        }
    }

    /// Largest proxy distance compatible with geodesic distance `d`.
    fn upper(&self, d: f64) -> f64 {
        match *self {
            Proxy::Exact | Proxy::LowerBound => d,
            Proxy::Chord { k } => 2.0 * (0.5 * (k * d).min(std::f64::consts::PI)).sin(),
        }
    }
}

#[derive(Clone, Debug, Default)]
struct SpatialHash {
    cell: f64,
    map: HashMap<[i64; 4], Vec<usize>>,
}

impl SpatialHash {
    fn new(cell: f64) -> Self {
        Self { cell, map: HashMap::new() }
    }

    fn key(&self, p: &Point) -> [i64; 4] {
        let mut k = [0i64; 4];
        for (i, c) in p.coords.as_slice().iter().enumerate() {
            k[i] = (c / self.cell).floor() as i64;
        }
        k
    }

    fn insert(&mut self, p: &Point, idx: usize) {
        let k = self.key(p);
        self.map.entry(k).or_default().push(idx);
    }

    /// Indices stored in the cells within `reach` cells of `p`.
    fn around(&self, p: &Point, reach: i64, dims: usize, out: &mut Vec<usize>) {
        out.clear();
        let base = self.key(p);
        let span = (2 * reach + 1) as usize;
        let total = span.pow(dims as u32);
        for code in 0..total {
            let mut k = base;
            let mut c = code;
            for slot in k.iter_mut().take(dims) {
                *slot += (c % span) as i64 - reach;
                c /= span;
            }
            if let Some(v) = self.map.get(&k) {
                out.extend_from_slice(v);
            }
        }
    }
}

/// Measured constants and structural checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicReport {
    pub samples: usize,
    /// Smallest inner-ball coefficient over cubes with an outside sample within `δ₀^j`.
    pub c1: f64,
    /// Largest `2 max_{y∈Q} d(z_α, y) / δ₀^j`, an upper estimate of the diameter coefficient.
    pub c2: f64,
    pub nesting_violations: usize,
    pub uniqueness_violations: usize,
    /// Fraction of domain samples in no cube.
    pub coverage_defect: f64,
    /// Binomial half-width for the coverage fraction.
    pub sampling_error: f64,
    /// Pairs of same-generation centers closer than `δ₀^j`.
    pub separation_violations: usize,
    /// Largest distance from a sample to the net of each generation, over `δ₀^j`.
    pub covering_ratio: Vec<f64>,
    /// Typical spacing of the samples relative to the finest scale.
    pub resolution: f64,
}

/// Dyadic decomposition of `B(center, radius)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicDecomposition {
    pub manifold: ManifoldModel,
    pub center: Point,
    pub radius: f64,
    pub delta0: f64,
    pub j_min: i32,
    pub j_max: i32,
    /// Nested nets: generation `j` uses `points[..counts[j - j_min]]`.
    pub points: Vec<Point>,
    pub counts: Vec<usize>,
    /// `parents[g][i]` is the parent in generation `j_min + g` of point `i`
    /// of generation `j_min + g + 1`.
    pub parents: Vec<Vec<usize>>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    #[serde(skip)]
    grids: Vec<SpatialHash>,
}

const MAX_CANDIDATES: usize = 4_000_000;

/// Candidates per unit of `(radius / finest scale)^n`.
const CANDIDATE_DENSITY: f64 = 40.0;

impl DyadicDecomposition {
    /// Greedy nested nets for generations `j_min..=j_max`. The candidate
    /// stream starts at the center, so the coarsest generation contains it.
    pub fn build(m: &ManifoldModel, center: &Point, radius: f64, delta0: f64, j_min: i32, j_max: i32) -> Result<Self> {
        if !(delta0 > 0.0 && delta0 <= 0.5) {
            return Err(Error::Config(format!("delta0 must lie in (0, 1/2], got {delta0}")));
        }
        if j_max < j_min {
            return Err(Error::Config("j_max must be at least j_min".into()));
        }
        if radius >= m.injectivity_radius(center) {
            return Err(Error::Config("domain must lie strictly inside the injectivity ball".into()));
        }
        let n = m.dim();
        let finest = delta0.powi(j_max);
        let candidates = (CANDIDATE_DENSITY * (radius / finest).powi(n as i32)).ceil() as usize + 1;
        if candidates > MAX_CANDIDATES {
            return Err(Error::Config(format!(
                "finest generation needs about {candidates} candidates; reduce j_max or the radius"
            )));
        }
        let mut stream = vec![*center];
        stream.extend(m.sample_ball(center, radius, candidates, &[0.5; 3]).into_iter().map(|(p, _)| p));

        let mut d = Self {
            manifold: *m,
            center: *center,
            radius,
            delta0,
            j_min,
            j_max,
            points: Vec::new(),
            counts: Vec::new(),
            parents: Vec::new(),
            c1: None,
            c2: None,
            grids: Vec::new(),
        };
        let proxy = Proxy::of(m);
        let mut buf = Vec::new();
        for j in j_min..=j_max {
            let sep = delta0.powi(j);
            let mut grid = SpatialHash::new(sep);
            for (i, p) in d.points.iter().enumerate() {
                grid.insert(p, i);
            }
            for z in &stream {
                let reach = (proxy.upper(sep) / sep).ceil() as i64;
                grid.around(z, reach, m.coord_len(), &mut buf);
                let cut = proxy.upper(sep);
                let clash = buf
                    .iter()
                    .any(|&i| d.points[i].coords.dist(&z.coords) < cut && m.dist(&d.points[i], z) < sep);
                if !clash {
                    grid.insert(z, d.points.len());
                    d.points.push(*z);
                }
            }
            d.counts.push(d.points.len());
        }
        d.rebuild_grids();
        for g in 0..d.counts.len().saturating_sub(1) {
            let j = j_min + g as i32;
            let parents: Vec<usize> = (0..d.counts[g + 1])
                .map(|i| if i < d.counts[g] { i } else { d.nearest_in(&d.points[i], j) })
                .collect();
            d.parents.push(parents);
        }
        Ok(d)
    }

    fn rebuild_grids(&mut self) {
        self.grids = (self.j_min..=self.j_max)
            .map(|j| {
                let mut g = SpatialHash::new(self.delta0.powi(j));
                for i in 0..self.count(j) {
                    g.insert(&self.points[i], i);
                }
                g
            })
            .collect();
    }

    pub fn generations(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    /// Number of cubes of generation `j`.
    pub fn count(&self, j: i32) -> usize {
        self.counts[(j - self.j_min) as usize]
    }

    pub fn scale(&self, j: i32) -> f64 {
        self.delta0.powi(j)
    }

    pub fn center_of(&self, id: CubeId) -> &Point {
        &self.points[id.index]
    }

    pub fn parent(&self, id: CubeId) -> Option<CubeId> {
        if id.generation <= self.j_min {
            return None;
        }
        let g = (id.generation - 1 - self.j_min) as usize;
        Some(CubeId { generation: id.generation - 1, index: self.parents[g][id.index] })
    }

    pub fn children(&self, id: CubeId) -> Vec<CubeId> {
        if id.generation >= self.j_max {
            return Vec::new();
        }
        let g = (id.generation - self.j_min) as usize;
        self.parents[g]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == id.index)
            .map(|(i, _)| CubeId { generation: id.generation + 1, index: i })
            .collect()
    }

    /// Nearest net point of generation `j` (ties by lowest index).
    fn nearest_in(&self, y: &Point, j: i32) -> usize {
        let m = &self.manifold;
        let proxy = Proxy::of(m);
        let grid = &self.grids[(j - self.j_min) as usize];
        let count = self.count(j);
        let mut buf = Vec::new();
        let mut reach = 1i64;
        loop {
            grid.around(y, reach, m.coord_len(), &mut buf);
            buf.sort_unstable();
            let mut best: Option<(f64, usize)> = None;
            for &i in &buf {
                let d = m.dist(&self.points[i], y);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, i));
                }
            }
            if let Some((bd, bi)) = best {
                if proxy.upper(bd) <= reach as f64 * grid.cell {
                    return bi;
                }
            }
            if buf.len() >= count {
                return best.map(|b| b.1).unwrap_or(0);
            }
            reach *= 2;
        }
    }

    /// Cube of generation `j` containing `y`.
    pub fn locate(&self, y: &Point, j: i32) -> Result<CubeId> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::Config(format!("generation {j} outside [{}, {}]", self.j_min, self.j_max)));
        }
        if self.manifold.dist(&self.center, y) > self.radius {
            return Err(Error::OutOfDomain);
        }
        let mut idx = self.nearest_in(y, self.j_max);
        let mut g = self.j_max;
        while g > j {
            idx = self.parents[(g - 1 - self.j_min) as usize][idx];
            g -= 1;
        }
        Ok(CubeId { generation: j, index: idx })
    }

    /// All generations at once, finest first.
    pub fn locate_chain(&self, y: &Point) -> Result<Vec<CubeId>> {
        if self.manifold.dist(&self.center, y) > self.radius {
            return Err(Error::OutOfDomain);
        }
        let mut idx = self.nearest_in(y, self.j_max);
        let mut out = vec![CubeId { generation: self.j_max, index: idx }];
        for g in (self.j_min..self.j_max).rev() {
            idx = self.parents[(g - self.j_min) as usize][idx];
            out.push(CubeId { generation: g, index: idx });
        }
        Ok(out)
    }

    /// `k_R` with `c₂ δ₀^{k_R - 1} < R ≤ c₂ δ₀^{k_R - 2}`.
    pub fn generation_for_radius(&self, r: f64) -> Result<i32> {
        let c2 = self.c2.ok_or_else(|| Error::Config("c2 is not measured yet; run verify first".into()))?;
        Ok(generation_for_radius(c2, self.delta0, r))
    }

    /// Samples `budget` domain points and measures properties (i)–(v).
    pub fn verify(&mut self, budget: usize) -> DyadicReport {
        let m = self.manifold;
        let n = m.dim();
        let samples: Vec<Point> = m
            .sample_ball(&self.center, self.radius, budget, &[0.25, 0.75, 0.5])
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        let gens: Vec<i32> = self.generations().collect();
        let mut outer: HashMap<CubeId, f64> = HashMap::new();
        let mut inner: HashMap<CubeId, f64> = HashMap::new();
        let mut covering = vec![0.0f64; gens.len()];
        let mut nesting = 0;
        let mut uniqueness = 0;
        let mut uncovered = 0;
        let mut buf = Vec::new();
        for y in &samples {
            let chain = match self.locate_chain(y) {
                Ok(c) => c,
                Err(_) => {
                    uncovered += 1;
                    continue;
                }
            };
            for w in chain.windows(2) {
                if self.parent(w[0]) != Some(w[1]) {
                    nesting += 1;
                }
            }
            for id in &chain {
                let j = id.generation;
                let g = (j - self.j_min) as usize;
                let scale = self.scale(j);
                let d_own = m.dist(self.center_of(*id), y);
                let e = outer.entry(*id).or_insert(0.0);
                *e = e.max(d_own);
                let direct = self.locate(y, j).map(|c| c == *id).unwrap_or(false);
                if !direct {
                    uniqueness += 1;
                }
                let grid = &self.grids[g];
                grid.around(y, 1, m.coord_len(), &mut buf);
                let mut nearest = f64::INFINITY;
                for &i in &buf {
                    let d = m.dist(&self.points[i], y);
                    nearest = nearest.min(d);
                    if i != id.index && d < scale {
                        let key = CubeId { generation: j, index: i };
                        let e = inner.entry(key).or_insert(f64::INFINITY);
                        *e = e.min(d);
                    }
                }
                covering[g] = covering[g].max(nearest.min(d_own) / scale);
            }
        }
        let separation_violations = self.separation_violations();
        let c2 = outer.iter().map(|(id, d)| 2.0 * d / self.scale(id.generation)).fold(0.0, f64::max);
        let mut c1 = f64::INFINITY;
        for g in 0..gens.len() {
            let j = gens[g];
            for a in 0..self.count(j) {
                let id = CubeId { generation: j, index: a };
                let r = inner.get(&id).copied().unwrap_or(self.scale(j));
                c1 = c1.min(r / self.scale(j));
            }
        }
        self.c1 = Some(c1);
        self.c2 = Some(c2);
        let p = uncovered as f64 / samples.len().max(1) as f64;
        let vol = crate::numeric::unit_ball_volume(n) * self.radius.powi(n as i32);
        let spacing = (vol / samples.len().max(1) as f64).powf(1.0 / n as f64);
        DyadicReport {
            samples: samples.len(),
            c1,
            c2,
            nesting_violations: nesting,
            uniqueness_violations: uniqueness,
            coverage_defect: p,
            sampling_error: binomial_half_width(p.max(1.0 / samples.len().max(1) as f64), samples.len()),
            separation_violations,
            covering_ratio: covering,
            resolution: spacing / self.scale(self.j_max),
        }
    }

    /// Same-generation center pairs closer than `δ₀^j`.
    pub fn separation_violations(&self) -> usize {
        let m = &self.manifold;
        let mut buf = Vec::new();
        let mut count = 0;
        for (g, j) in self.generations().enumerate() {
            let sep = self.scale(j);
            for a in 0..self.count(j) {
                self.grids[g].around(&self.points[a], 1, m.coord_len(), &mut buf);
                count += buf
                    .iter()
                    .filter(|&&b| b > a && m.dist(&self.points[a], &self.points[b]) < sep * (1.0 - 1e-12))
                    .count();
            }
        }
        count
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut d: Self = serde_json::from_str(s)?;
        d.rebuild_grids();
        Ok(d)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `k_R` with `c₂ δ₀^{k_R - 1} < R ≤ c₂ δ₀^{k_R - 2}`.
pub fn generation_for_radius(c2: f64, delta0: f64, r: f64) -> i32 {
    let x = (r / c2).ln() / delta0.ln();
    let m = (x + 1e-12).floor() as i32;
    m + 2
}
