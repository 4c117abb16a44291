use serde::{Deserialize, Serialize};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

/// Capacity of [`Coords`]; enough for the 3-sphere embedded in `R^4`.
pub const MAX_COORDS: usize = 4;

/// A short real vector stored inline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coords {
    v: [f64; MAX_COORDS],
    len: usize,
}

impl Coords {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_COORDS, "at most {MAX_COORDS} coordinates are supported");
        Self { v: [0.0; MAX_COORDS], len }
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut c = Self::zeros(xs.len());
        c.v[..xs.len()].copy_from_slice(xs);
        c
    }

    /// The `i`-th standard basis vector of length `len`.
    pub fn basis(len: usize, i: usize) -> Self {
        let mut c = Self::zeros(len);
        c.v[i] = 1.0;
        c
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.v[..self.len]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.len, other.len);
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.len {
            out.v[i] += a * other.v[i];
        }
        out
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for Coords {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Coords {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.v[..self.len][i]
    }
}

impl Add for Coords {
    type Output = Coords;
    fn add(self, o: Coords) -> Coords {
        self.axpy(1.0, &o)
    }
}

impl Sub for Coords {
    type Output = Coords;
    fn sub(self, o: Coords) -> Coords {
        self.axpy(-1.0, &o)
    }
}

impl Neg for Coords {
    type Output = Coords;
    fn neg(self) -> Coords {
        self * -1.0
    }
}

impl Mul<f64> for Coords {
    type Output = Coords;
    fn mul(mut self, a: f64) -> Coords {
        for i in 0..self.len {
            self.v[i] *= a;
        }
        self
    }
}

impl Serialize for Coords {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Coords {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<f64> = Vec::deserialize(d)?;
        if v.len() > MAX_COORDS {
            return Err(serde::de::Error::custom(format!(
                "at most {MAX_COORDS} coordinates are supported"
            )));
        }
        Ok(Coords::from_slice(&v))
    }
}

/// A point of a model manifold, in the chart of its model: Cartesian
/// coordinates for Euclidean space, a unit vector of `R^{n+1}` for spheres and
/// the planar graph chart for surfaces of revolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    pub coords: Coords,
}

impl Point {
    pub fn new(coords: Coords) -> Self {
        Self { coords }
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        Self::new(Coords::from_slice(xs))
    }
}

/// A tangent vector at `base`, with components in the orthonormal frame the
/// manifold assigns to `base`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: Point,
    pub comps: Coords,
}

impl TangentVector {
    pub fn new(base: Point, comps: Coords) -> Self {
        Self { base, comps }
    }

    pub fn zero(base: Point, dim: usize) -> Self {
        Self::new(base, Coords::zeros(dim))
    }

    /// Metric norm; the frame is orthonormal so this is the Euclidean norm of the components.
    pub fn norm(&self) -> f64 {
        self.comps.norm()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.base, self.comps * a)
    }
}
