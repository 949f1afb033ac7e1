//! Every inference rule is sound on a concrete instance and rejects a
//! violating one.

mod support;

#[test]
fn rules_are_sound_on_smoke_instances_and_reject_violations() {
    let lines = support::rules::run().unwrap_or_else(|e| panic!("{}", e));
    for l in &lines {
        println!("{}", l);
    }
}
