use tokcol::corpus;
use tokcol::topology::make_ring;
use tokcol::trace_io::{read_trace, write_trace};
use tokcol::verify::{check_trace, InvariantReport};
use tokcol::{run, Algorithm, Knowledge, RunConfig};

#[test]
fn randomized_traces_satisfy_invariants() {
    let mut total = InvariantReport::default();
    for e in corpus::generate(120, 77).unwrap() {
        let know = if e.id % 2 == 0 { Knowledge::N } else { Knowledge::K };
        let mut cfg = RunConfig::new(Algorithm::Randomized, know).with_trace();
        cfg.seed = e.seed;
        let Ok(out) = run(&e.instance.topology, &e.instance.tokens, &cfg) else { continue };
        total.merge(&check_trace(out.trace.as_ref().unwrap(), &e.instance.tokens, &e.instance.topology));
    }
    assert!(total.traces > 100);
    assert!(total.passed(), "{}", total.to_text());
}

#[test]
fn deterministic_traces_satisfy_invariants() {
    let mut total = InvariantReport::default();
    for e in corpus::generate(60, 3).unwrap() {
        for cfg in corpus::configs(&e) {
            let out = run(&e.instance.topology, &e.instance.tokens, &cfg.with_trace()).unwrap();
            total.merge(&check_trace(out.trace.as_ref().unwrap(), &e.instance.tokens, &e.instance.topology));
        }
    }
    assert!(total.passed(), "{}", total.to_text());
}

#[test]
fn written_traces_check_the_same() {
    let e = &corpus::generate(8, 9).unwrap()[5];
    let cfg = RunConfig::new(Algorithm::DetLarge, Knowledge::N).with_trace();
    let out = run(&e.instance.topology, &e.instance.tokens, &cfg).unwrap();
    let trace = out.trace.unwrap();
    let mut buf = Vec::new();
    write_trace(&trace, &mut buf).unwrap();
    let back = read_trace(buf.as_slice()).unwrap();
    assert_eq!(
        check_trace(&back, &e.instance.tokens, &e.instance.topology),
        check_trace(&trace, &e.instance.tokens, &e.instance.topology)
    );
}

#[test]
fn truncated_trace_is_flagged() {
    let t = make_ring(5, 0).unwrap();
    let a = tokcol::topology::TokenAssignment::from_values(4, &[&[1], &[2], &[3], &[4], &[5]]).unwrap();
    let mut cfg = RunConfig::new(Algorithm::DetSmall, Knowledge::None).with_trace();
    cfg.round_limit = Some(30);
    let out = run(&t, &a, &cfg).unwrap();
    let rep = check_trace(out.trace.as_ref().unwrap(), &a, &t);
    assert!(rep.truncated && rep.passed(), "{}", rep.to_text());
}
