//! Small fixed-size linear algebra helpers on top of `nalgebra`.

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

/// Diagonal 2×2 matrix.
pub fn diag(a: f64, b: f64) -> Mat2 {
    Mat2::new(a, 0.0, 0.0, b)
}

/// `true` when off-diagonal entries are zero and both diagonal entries are
/// strictly positive and finite.
pub fn is_positive_diagonal(m: &Mat2) -> bool {
    m[(0, 1)] == 0.0
        && m[(1, 0)] == 0.0
        && m[(0, 0)].is_finite()
        && m[(1, 1)].is_finite()
        && m[(0, 0)] > 0.0
        && m[(1, 1)] > 0.0
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn symmetric_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let radius = libm::hypot(0.5 * (a - d), b);
    (mean - radius, mean + radius)
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat2) -> f64 {
    let gram = m.transpose() * m;
    let (_, hi) = symmetric_eigenvalues(&gram);
    libm::sqrt(hi.max(0.0))
}

/// `v / ‖v‖^power`, taken as zero when `‖v‖ < eps`.
pub fn scaled_direction(v: &Vec2, power: f64, eps: f64) -> Vec2 {
    let n = v.norm();
    if n < eps {
        Vec2::zeros()
    } else {
        v / libm::pow(n, power)
    }
}

pub fn is_finite(v: &Vec2) -> bool {
    v[0].is_finite() && v[1].is_finite()
}
