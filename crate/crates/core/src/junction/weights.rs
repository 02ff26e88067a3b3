//! Time-fraction weights of switching cycles at the junction.

use crate::error::{Error, Result};
use crate::scalar::Field;

/// Weight of branch `-1` in a two-branch cycle.
///
/// `f_minus >= 0` is the speed towards the junction on the negative axis and
/// `f_plus <= 0` the one on the positive axis; the weight solves
/// `mu f_minus + (1 - mu) f_plus = 0`.
pub fn mu_twofold<T: Field>(f_minus: T, f_plus: T) -> Result<T> {
    let zero = T::zero();
    if f_minus < zero || f_plus > zero {
        return Err(Error::DegenerateWeights("dynamics do not point towards the junction"));
    }
    if f_minus == zero && f_plus == zero {
        return Err(Error::DegenerateWeights("both dynamics vanish"));
    }
    Ok(f_plus / (f_plus - f_minus))
}

/// Weights of a full three-branch cycle; all dynamics `<= 0`, at most one zero.
pub fn mu_threefold<T: Field>(f1: T, f2: T, f3: T) -> Result<(T, T, T)> {
    let zero = T::zero();
    if f1 > zero || f2 > zero || f3 > zero {
        return Err(Error::DegenerateWeights("dynamics do not point towards the junction"));
    }
    let zeros = [f1, f2, f3].iter().filter(|f| **f == zero).count();
    if zeros >= 2 {
        return Err(Error::DegenerateWeights("two or more dynamics vanish"));
    }
    let (p1, p2, p3) = (f2 * f3, f1 * f3, f1 * f2);
    let d = p1 + p2 + p3;
    Ok((p1 / d, p2 / d, p3 / d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    type Q = Ratio<i64>;

    fn q(n: i64) -> Q {
        Q::from_integer(n)
    }

    #[test]
    fn twofold_examples() {
        assert_eq!(mu_twofold(q(1), q(-1)).unwrap(), Q::new(1, 2));
        assert_eq!(mu_twofold(q(0), q(-1)).unwrap(), q(1));
        assert_eq!(mu_twofold(q(2), q(-1)).unwrap(), Q::new(1, 3));
        assert!(mu_twofold(q(0), q(0)).is_err());
        assert!(mu_twofold(-1.0, -1.0).is_err());
    }

    #[test]
    fn threefold_examples() {
        let third = Q::new(1, 3);
        assert_eq!(mu_threefold(q(-1), q(-1), q(-1)).unwrap(), (third, third, third));
        assert_eq!(mu_threefold(q(-1), q(-2), q(-2)).unwrap(), (Q::new(1, 2), Q::new(1, 4), Q::new(1, 4)));
        assert_eq!(mu_threefold(q(0), q(-1), q(-1)).unwrap(), (q(1), q(0), q(0)));
        assert!(mu_threefold(q(0), q(0), q(-1)).is_err());
        assert!(mu_threefold(q(1), q(-1), q(-1)).is_err());
    }

    proptest! {
        #[test]
        fn threefold_weights_are_a_partition(f1 in -10.0f64..=0.0, f2 in -10.0f64..-1e-3, f3 in -10.0f64..-1e-3) {
            let (m1, m2, m3) = mu_threefold(f1, f2, f3).unwrap();
            prop_assert!((m1 + m2 + m3 - 1.0).abs() <= 1e-12);
            for m in [m1, m2, m3] {
                prop_assert!((0.0..=1.0 + 1e-15).contains(&m));
            }
            // weighted drift vanishes on every branch pair: mu_i f_i is the same for all i
            prop_assert!((m1 * f1 - m2 * f2).abs() <= 1e-12 * (1.0 + f1.abs() * f2.abs()));
        }

        #[test]
        fn one_resting_branch_takes_all_weight(f2 in 1i64..50, f3 in 1i64..50) {
            let (m1, m2, m3) = mu_threefold(q(0), q(-f2), q(-f3)).unwrap();
            prop_assert_eq!(m1, q(1));
            prop_assert_eq!(m2 + m3, q(0));
            let mu = mu_twofold(q(f2), q(-f3)).unwrap();
            prop_assert!(mu >= q(0) && mu <= q(1));
        }

        #[test]
        fn twofold_balances_drift(fm in 0i64..100, fp in -100i64..=0) {
            prop_assume!(fm != 0 || fp != 0);
            let mu = mu_twofold(q(fm), q(fp)).unwrap();
            prop_assert!(mu >= q(0) && mu <= q(1));
            prop_assert_eq!(mu * q(fm) + (q(1) - mu) * q(fp), q(0));
        }
    }
}
