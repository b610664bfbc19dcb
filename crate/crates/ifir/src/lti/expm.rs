//! Dense matrix exponential by scaling and squaring with Pade approximants.
//!
//! Order-13 diagonal Pade with the degree-selection thresholds from Higham's
//! revisited scaling-and-squaring analysis; accuracy is near machine
//! precision for well-scaled inputs.

use nalgebra::DMatrix;

use crate::{Error, Result};

const THETA_3: f64 = 1.495585217958292e-2;
#[allow(clippy::excessive_precision)] // table value, kept verbatim
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

/// Computes `exp(a)` for a square real matrix.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::dim(format!(
            "expm needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("expm input has non-finite entries"));
    }

    let norm = one_norm(a);
    let (u, v, squarings) = if norm < THETA_3 {
        let (u, v) = pade(a, &[120.0, 60.0, 12.0, 1.0]);
        (u, v, 0)
    } else if norm < THETA_5 {
        let (u, v) = pade(a, &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]);
        (u, v, 0)
    } else if norm < THETA_7 {
        let (u, v) = pade(
            a,
            &[
                17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
            ],
        );
        (u, v, 0)
    } else if norm < THETA_9 {
        let (u, v) = pade(
            a,
            &[
                17643225600.0,
                8821612800.0,
                2075673600.0,
                302702400.0,
                30270240.0,
                2162160.0,
                110880.0,
                3960.0,
                90.0,
                1.0,
            ],
        );
        (u, v, 0)
    } else {
        let squarings = ((norm / THETA_13).log2().ceil().max(0.0)) as u32;
        let scaled = a * 2f64.powi(-(squarings as i32));
        let (u, v) = pade13(&scaled);
        (u, v, squarings)
    };

    // exp(A) ~ (V - U)^-1 (V + U)
    let numer = &v + &u;
    let denom = &v - &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::numeric("expm Pade denominator is singular"))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("expm result has non-finite entries"));
    }
    Ok(r)
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Pade numerator/denominator for odd degree <= 9 with coefficient table `b`.
fn pade(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut powers = vec![id.clone()]; // A^0
    let a2 = a * a;
    let half = (b.len() - 1) / 2;
    for _ in 0..half {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    // U = A * sum b[2k+1] A^2k, V = sum b[2k] A^2k
    let mut u_sum = DMatrix::<f64>::zeros(n, n);
    let mut v_sum = DMatrix::<f64>::zeros(n, n);
    for k in 0..=half {
        if 2 * k + 1 < b.len() {
            u_sum += &powers[k] * b[2 * k + 1];
        }
        v_sum += &powers[k] * b[2 * k];
    }
    (a * u_sum, v_sum)
}

fn pade13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    const B: [f64; 14] = [
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
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u = a
        * (&a6 * (&a6 * B[13] + &a4 * B[11] + &a2 * B[9])
            + &a6 * B[7]
            + &a4 * B[5]
            + &a2 * B[3]
            + &id * B[1]);
    let v = &a6 * (&a6 * B[12] + &a4 * B[10] + &a2 * B[8])
        + &a6 * B[6]
        + &a4 * B[4]
        + &a2 * B[2]
        + &id * B[0];
    (u, v)
}
