//! Small fixed-size matrix helpers used by the transfer-matrix and SDE code.

use num_complex::Complex64;

/// 2x2 complex matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2c {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mat2c {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2c { a, b, c, d }
    }

    pub fn identity() -> Self {
        Mat2c::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        )
    }

    pub fn from_real(m: Mat2r) -> Self {
        Mat2c::new(
            Complex64::new(m.a, 0.0),
            Complex64::new(m.b, 0.0),
            Complex64::new(m.c, 0.0),
            Complex64::new(m.d, 0.0),
        )
    }

    pub fn mul(&self, rhs: &Mat2c) -> Mat2c {
        Mat2c::new(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }

    pub fn add(&self, rhs: &Mat2c) -> Mat2c {
        Mat2c::new(self.a + rhs.a, self.b + rhs.b, self.c + rhs.c, self.d + rhs.d)
    }

    pub fn scale(&self, s: Complex64) -> Mat2c {
        Mat2c::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace_aat(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    /// Column-1 action: M * (x, y)^T.
    pub fn apply(&self, x: Complex64, y: Complex64) -> (Complex64, Complex64) {
        (self.a * x + self.b * y, self.c * x + self.d * y)
    }

    pub fn max_abs_diff(&self, rhs: &Mat2c) -> f64 {
        let d1 = (self.a - rhs.a).norm();
        let d2 = (self.b - rhs.b).norm();
        let d3 = (self.c - rhs.c).norm();
        let d4 = (self.d - rhs.d).norm();
        d1.max(d2).max(d3).max(d4)
    }
}

/// 2x2 real matrix, used for raw transfer products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2r {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2r {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2r { a, b, c, d }
    }

    pub fn identity() -> Self {
        Mat2r::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn mul(&self, rhs: &Mat2r) -> Mat2r {
        Mat2r::new(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Tr(M M^T), the squared Frobenius norm.
    pub fn trace_mmt(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }
}
