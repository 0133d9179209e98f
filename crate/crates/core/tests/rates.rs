use num_rational::Ratio;
use pmpir_core::pir_mbr::{
    dn_multiplier, mbr_bounds, mbr_schedule, rate_dn_mbr, rate_mbr, rate_mbr_alt,
};
use pmpir_core::pir_msr::{msr_schedule, rate_dn_msr, rate_msr, rate_msr_alt};
use pmpir_core::pm_codes::{Family, Geometry};

type Q = Ratio<i128>;

fn mbr_sweep(n_max: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for n in 2..=n_max {
        for k in 1..=n / 2 {
            for d in k..n {
                out.push((n, k, d));
            }
        }
    }
    out
}

fn msr_sweep(n_max: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for n in 4..=n_max {
        for alpha in 1..=(n - 2) / 2 {
            out.push((n, alpha));
        }
    }
    out
}

/// `S B / total` with the total counted from the schedule.
fn counted_rate(g: &Geometry) -> Q {
    let schedule = match g.family {
        Family::Mbr => mbr_schedule(g),
        Family::Msr => msr_schedule(g),
    };
    let total: usize = schedule.per_server_counts().iter().sum();
    Q::new(g.file_symbols() as i128, total as i128)
}

#[test]
fn mbr_closed_forms_agree_with_counting() {
    for (n, k, d) in mbr_sweep(20) {
        let g = Geometry::new(Family::Mbr, n, k, d).unwrap();
        let r = rate_mbr(n, k, d).unwrap();
        assert_eq!(r, rate_mbr_alt(n, k, d).unwrap(), "({n},{k},{d})");
        assert_eq!(r, counted_rate(&g), "({n},{k},{d})");
    }
    assert!(rate_mbr(6, 4, 3).is_err());
}

#[test]
fn mbr_bound_sandwich() {
    for (n, k, d) in mbr_sweep(16) {
        let r = rate_mbr(n, k, d).unwrap();
        let (lower, upper, _) = mbr_bounds(n, k, d).unwrap();
        assert!(lower <= r && r <= upper, "({n},{k},{d})");
    }
    let (lower, upper, collusion) = mbr_bounds(40, 7, 8).unwrap();
    let r = rate_mbr(40, 7, 8).unwrap();
    assert!(lower <= r && r <= upper);
    assert!(collusion < upper);
}

#[test]
fn mbr_k_equals_d_gap() {
    // upper - rate is a nonnegative multiple of k(k-1)(k+1)(n-k-1)
    for n in 4..=30 {
        for k in 1..=n / 2 {
            let r = rate_mbr(n, k, k).unwrap();
            let (_, upper, _) = mbr_bounds(n, k, k).unwrap();
            let gap = upper - r;
            let poly = (k * (k - 1) * (k + 1) * (n - k - 1)) as i128;
            assert!(gap >= Q::from_integer(0));
            assert_eq!(gap.numer() == &0, poly == 0, "({n},{k})");
        }
    }
}

#[test]
fn mbr_dominates_baseline() {
    let mut seen = 0;
    for (n, k, d) in mbr_sweep(30) {
        if let Some(p) = dn_multiplier(n, k, d) {
            let baseline = rate_dn_mbr(n, k, d, p).unwrap();
            let (lower, _, _) = mbr_bounds(n, k, d).unwrap();
            let r = rate_mbr(n, k, d).unwrap();
            // both gaps vanish only at k = 1
            if k == 1 {
                assert!(baseline <= lower && lower == r);
            } else {
                assert!(baseline < lower && lower < r, "({n},{k},{d},{p})");
            }
            seen += 1;
        }
    }
    assert!(seen > 50);
}

#[test]
fn msr_closed_forms_and_sandwich() {
    for (n, alpha) in msr_sweep(40) {
        let (k, d) = (alpha + 1, 2 * alpha);
        let g = Geometry::new(Family::Msr, n, k, d).unwrap();
        let r = rate_msr(n, alpha).unwrap();
        assert_eq!(r, rate_msr_alt(n, alpha).unwrap());
        assert_eq!(r, counted_rate(&g), "({n},{alpha})");
        let baseline = rate_dn_msr(n, d).unwrap();
        assert!(baseline <= r);
        if n >= 6 || alpha >= 3 {
            assert!(r <= Q::new((n - k) as i128, n as i128), "({n},{alpha})");
        }
    }
    assert_eq!(rate_dn_msr(40, 20).unwrap(), Q::new(1, 2));
    assert!(rate_dn_msr(4, 4).is_err());
}
