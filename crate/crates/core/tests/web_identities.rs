use linweb::expr::RatExpr;
use linweb::forms::{trace, JetFrame};
use linweb::web::{
    frame_matrix, generic_quantities, omega_from_frame, omega_from_invariants, transposition_residuals, u1_from_omega,
    verify_structure,
};

#[test]
fn structure_equations_hold_for_generic_jets() {
    let w = generic_quantities().unwrap();
    let rep = verify_structure(&JetFrame, &w).unwrap();
    assert_eq!(rep.residuals.len(), 16);
    assert!(rep.nonzero().is_empty(), "nonzero residuals: {:?}", rep.nonzero());
}

#[test]
fn frame_identities_for_generic_jets() {
    let w = generic_quantities().unwrap();
    let fm = frame_matrix(&JetFrame, &w);
    assert_eq!(fm.det, w.mu);
    assert!((&(&w.z[0] + &w.z[1]) + &w.z[2]).is_one());
    let closed = omega_from_invariants(&JetFrame, &w.abc(), &w.u);
    let direct = omega_from_frame(&JetFrame, &w).unwrap();
    assert_eq!(closed, direct);
    assert_eq!(u1_from_omega(&closed), w.u[0]);
    assert_eq!(closed[1][0][0], &w.a * &w.u[0][0]);
    assert!(trace(&closed).iter().all(RatExpr::is_zero));
    let sum = linweb::forms::add(&linweb::forms::add(&w.u[0], &w.u[1]), &w.u[2]);
    assert!(sum.iter().all(RatExpr::is_zero));
}

#[test]
fn transposition_acts_on_invariants() {
    let w = generic_quantities().unwrap();
    for (name, r) in transposition_residuals(&w) {
        assert!(r.is_zero(), "{name}: {r}");
    }
}
