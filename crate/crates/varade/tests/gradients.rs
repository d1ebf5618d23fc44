//! Gradient check: analytic gradients from the tape vs central finite
//! differences of an independent f64 reimplementation of the forward pass
//! and loss. The f64 oracle keeps finite-difference noise far below the
//! comparison tolerance. The shared machinery lives in `tests/common`.

mod common;

#[test]
fn analytic_matches_central_finite_differences() {
    let worst = common::run_gradient_check();
    println!("max relative error over 20 configs: {worst:.3e}");
}
