//! Integer cyclotomic polynomials `Phi_N` via the product formula
//! `x^N - 1 = prod_{d | N} Phi_d(x)`.

use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Coefficients of `Phi_n`, lowest degree first.
pub fn cyclotomic_polynomial(n: u32) -> Vec<BigInt> {
    assert!(n >= 1);
    // phi[d] computed for every divisor d of n, ascending.
    let mut table: Vec<(u32, Vec<BigInt>)> = Vec::new();
    for d in 1..=n {
        if n % d != 0 {
            continue;
        }
        // x^d - 1
        let mut num = vec![BigInt::zero(); (d + 1) as usize];
        num[0] = -BigInt::one();
        num[d as usize] = BigInt::one();
        let mut quo = num;
        for (e, phi_e) in &table {
            if d % e == 0 {
                quo = poly_div_exact(&quo, phi_e);
            }
        }
        table.push((d, quo));
    }
    table.pop().unwrap().1
}

/// Exact division of integer polynomials; panics if not exact.
fn poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let dn = num.len() - 1;
    let dd = den.len() - 1;
    assert!(dn >= dd);
    let mut rem = num.to_vec();
    let mut quo = vec![BigInt::zero(); dn - dd + 1];
    for k in (0..=(dn - dd)).rev() {
        let c = rem[k + dd].clone(); // leading coefficient of den is 1
        quo[k] = c.clone();
        for j in 0..=dd {
            let t = &den[j] * &c;
            rem[k + j] -= t;
        }
    }
    assert!(rem.iter().all(|c| c.is_zero()), "non-exact division");
    quo
}
