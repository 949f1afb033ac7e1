//! The focused atomic checker against a direct reading of the typing rules.

mod support;

#[test]
fn focused_checker_agrees_with_naive_checker_up_to_size_6() {
    let summary = support::focused::run(6).unwrap_or_else(|e| panic!("{}", e));
    println!("{}", summary);
}
