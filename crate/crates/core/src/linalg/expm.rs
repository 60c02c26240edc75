use super::Mat;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn norm1(a: &Mat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant.
pub fn expm(a: &Mat) -> Mat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let nrm = norm1(a);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-s);
    let id = Mat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (u_inner + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let v_inner = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = v_inner + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled input");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn exp_of_rotation_generator() {
        let t = 0.7_f64;
        let a = Mat::from_row_slice(2, 2, &[0.0, t, -t, 0.0]);
        let e = expm(&a);
        let want = Mat::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        assert!(max_abs(&(e - want)) < 1e-15);
    }

    #[test]
    fn exp_of_jordan_block_large_norm() {
        let l = 6.0_f64;
        let a = Mat::from_row_slice(2, 2, &[l, 1.0, 0.0, l]);
        let e = expm(&a);
        let el = l.exp();
        assert!((e[(0, 0)] - el).abs() / el < 1e-13);
        assert!((e[(0, 1)] - el).abs() / el < 1e-13);
        assert!(e[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn exp_inverse_identity() {
        let a = Mat::from_row_slice(3, 3, &[0.3, -1.2, 0.5, 2.0, 0.1, -0.7, 0.4, 0.9, -0.2]);
        let p = expm(&a) * expm(&(-&a));
        assert!(max_abs(&(p - Mat::identity(3, 3))) < 1e-13);
    }
}
