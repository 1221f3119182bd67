pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Cyclic permutation sending the third axis onto the first.
pub const THIRD_TO_FIRST: Mat3 = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];

pub fn apply(m: &Mat3, x: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * x[0] + m[0][1] * x[1] + m[0][2] * x[2],
        m[1][0] * x[0] + m[1][1] * x[1] + m[1][2] * x[2],
        m[2][0] * x[0] + m[2][1] * x[1] + m[2][2] * x[2],
    ]
}

pub fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Householder reflection mapping `v / |v|` onto `±e1`.
///
/// The reflection vector is `u + sign(u0) e1`, which never cancels, so the
/// construction is stable for every nonzero `v`. Returns the identity for
/// the zero vector.
pub fn align_to_first_axis(v: [f64; 3]) -> Mat3 {
    let n = norm(v);
    if n == 0.0 {
        return IDENTITY;
    }
    let u = [v[0] / n, v[1] / n, v[2] / n];
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let w = [u[0] + sign, u[1], u[2]];
    let ww = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    let mut h = IDENTITY;
    for (i, row) in h.iter_mut().enumerate() {
        for (j, h_ij) in row.iter_mut().enumerate() {
            *h_ij -= 2.0 * w[i] * w[j] / ww;
        }
    }
    h
}

/// `|R^T R - I|_F`.
pub fn orthogonality_error(m: &Mat3) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += m[k][i] * m[k][j];
            }
            let e = s - if i == j { 1.0 } else { 0.0 };
            acc += e * e;
        }
    }
    acc.sqrt()
}
