mod common;

use common::{fock_port, oracle_sweep, rel_err};

#[test]
fn fock_oracle_conserves_probability() {
    for (t2, n) in [(0.3, 0.0), (0.5, 1.0), (0.9, 0.2), (0.05, 1.9)] {
        let f = fock_port(t2, n);
        assert!((f.dark0 + f.click0 - 1.0).abs() < 1e-13);
        assert!((f.dark1 + f.click1 - 1.0).abs() < 1e-13);
    }
}

#[test]
fn fock_oracle_noiseless_port() {
    let f = fock_port(0.37, 0.0);
    assert_eq!(f.dark0, 1.0);
    assert!(rel_err(f.click1, 0.37) < 1e-14);
}

#[test]
fn library_matches_fock_oracle() {
    let (worst, n, at) = oracle_sweep(7, 300);
    assert!(n >= 300 * 30);
    assert!(worst < 1e-9, "{at}");
}
