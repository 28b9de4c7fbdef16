//! Arithmetic in GF(2^8) with the reduction polynomial
//! x^8 + x^4 + x^3 + x + 1 (0x11b), implemented with log/exp tables
//! over the generator 3.

const fn build_tables() -> ([u8; 256], [u8; 256]) {
    let mut exp = [0u8; 256];
    let mut log = [0u8; 256];
    let mut x: u8 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x;
        log[x as usize] = i as u8;
        // multiply x by the generator 3, i.e. x ^= xtime(x)
        let carry = x & 0x80 != 0;
        let mut doubled = x << 1;
        if carry {
            doubled ^= 0x1b;
        }
        x ^= doubled;
        i += 1;
    }
    exp[255] = 1; // 3^255 == 1
    (exp, log)
}

const TABLES: ([u8; 256], [u8; 256]) = build_tables();
const EXP: [u8; 256] = TABLES.0;
const LOG: [u8; 256] = TABLES.1;

pub fn add(a: u8, b: u8) -> u8 {
    a ^ b
}

pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    let idx = (LOG[a as usize] as u16 + LOG[b as usize] as u16) % 255;
    EXP[idx as usize]
}

/// Multiplicative inverse; panics on 0, which has none.
pub fn inv(a: u8) -> u8 {
    assert!(a != 0, "0 has no inverse in GF(256)");
    EXP[((255 - LOG[a as usize] as u16) % 255) as usize]
}

pub fn div(a: u8, b: u8) -> u8 {
    mul(a, inv(b))
}

/// Evaluates the polynomial with the given coefficients (constant term
/// first) at `x`, by Horner's rule.
pub fn poly_eval(coeffs: &[u8], x: u8) -> u8 {
    let mut acc = 0u8;
    for &c in coeffs.iter().rev() {
        acc = add(mul(acc, x), c);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference multiplication by shift-and-add reduction, sharing no
    /// code with the table implementation.
    fn slow_mul(a: u8, b: u8) -> u8 {
        let mut acc: u16 = 0;
        let mut aa: u16 = a as u16;
        let mut bb = b;
        while bb != 0 {
            if bb & 1 != 0 {
                acc ^= aa;
            }
            aa <<= 1;
            if aa & 0x100 != 0 {
                aa ^= 0x11b;
            }
            bb >>= 1;
        }
        acc as u8
    }

    #[test]
    fn mul_matches_reference_exhaustively() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(mul(a, b), slow_mul(a, b), "a={a} b={b}");
            }
        }
    }

    #[test]
    fn every_nonzero_element_has_inverse() {
        for a in 1..=255u8 {
            assert_eq!(mul(a, inv(a)), 1, "a={a}");
        }
    }

    #[test]
    fn one_is_multiplicative_identity() {
        for a in 0..=255u8 {
            assert_eq!(mul(a, 1), a);
        }
    }

    #[test]
    fn addition_is_self_inverse() {
        for a in 0..=255u8 {
            assert_eq!(add(a, a), 0);
        }
    }

    #[test]
    fn distributivity_sampled() {
        for a in (0..=255u8).step_by(7) {
            for b in (0..=255u8).step_by(11) {
                for c in (0..=255u8).step_by(13) {
                    assert_eq!(mul(a, add(b, c)), add(mul(a, b), mul(a, c)));
                }
            }
        }
    }

    #[test]
    #[should_panic(expected = "no inverse")]
    fn zero_has_no_inverse() {
        inv(0);
    }

    #[test]
    fn poly_eval_known_values() {
        // p(x) = 5 + 3x, so p(0) = 5 and p(1) = 5 ^ 3 = 6
        assert_eq!(poly_eval(&[5, 3], 0), 5);
        assert_eq!(poly_eval(&[5, 3], 1), 6);
        // p(x) = x^2: p(a) must agree with mul(a, a)
        for a in 0..=255u8 {
            assert_eq!(poly_eval(&[0, 0, 1], a), slow_mul(a, a));
        }
    }
}
