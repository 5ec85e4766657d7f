use std::io::Write;

use spki_cli::run_cli;
use spki_core::codec::decode_run_events;
use spki_core::sexpr::parse_sexpr;

const RON_JOE: &str = "(cert (issuer (name k-ron doctor)) (subject (name k-joe doctor)) (valid (not-before 1) (not-after 3)))
(cert (issuer (name k-joe doctor)) (subject k-d) (valid (not-before 1) (not-after 3)))";

fn v(lo: u64, hi: u64) -> String {
    format!("(valid (not-before {lo}) (not-after {hi}))")
}

fn run(args: &[&str], stdin: &str) -> (i32, String, String) {
    let argv: Vec<&str> = std::iter::once("spki").chain(args.iter().copied()).collect();
    let (status, out, err) = run_cli(&argv, stdin.as_bytes());
    (status, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn temp_file(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn decide_ron_joe() {
    let (status, out, _) =
        run(&["decide", "--issuer", "k-ron", "--name", "doctor", "--subject", "k-d", "--time", "2", "-"], RON_JOE);
    assert_eq!(status, 0, "{out}");
    assert!(out.starts_with("YES"));
    let rules: Vec<&str> = out.lines().filter(|l| l.contains(": R")).collect();
    assert_eq!(rules.len(), 1);
    assert!(rules[0].contains("R2 [1,2]"));
    assert_eq!(out.lines().filter(|l| l.contains(": INPUT")).count(), 2);

    let (status, out, _) =
        run(&["decide", "--issuer", "k-ron", "--name", "doctor", "--subject", "k-d", "--time", "7"], RON_JOE);
    assert_eq!(status, 1);
    assert!(out.starts_with("NO"));
}

#[test]
fn decide_agrees_with_oracle() {
    for t in 0..6 {
        let ts = t.to_string();
        let (decided, _, _) =
            run(&["decide", "--issuer", "k-ron", "--name", "doctor", "--subject", "k-d", "--time", &ts], RON_JOE);
        let phi = format!("(implies (now-in {}) (bound (name k-ron doctor) k-d))", v(t, t));
        let (entailed, out, _) = run(&["oracle", "--formula", &phi], RON_JOE);
        assert_eq!(decided, entailed, "t = {t}: {out}");
        assert!(out.contains("|K| = 3"));
    }
}

#[test]
fn decide_authorization() {
    let certs = format!(
        "(cert (issuer k-a) (subject k-b) (propagate) (tag (set read write)) {})
         (cert (issuer k-b) (subject k-c) (tag (set read)) {})",
        v(0, 9),
        v(2, 5)
    );
    let q = |act: &str, t: &str| run(&["decide", "--issuer", "k-a", "--subject", "k-c", "--action", act, "--time", t], &certs).0;
    assert_eq!(q("read", "3"), 0);
    assert_eq!(q("write", "3"), 1);
    assert_eq!(q("read", "6"), 1);
    let (status, _, _) =
        run(&["decide", "--issuer", "k-a", "--subject", "k-b", "--action", "write", "--delegate", "--time", "0"], &certs);
    assert_eq!(status, 0);
}

#[test]
fn prove_needs_interval_merging() {
    let certs = format!(
        "(cert (issuer (name k-k n)) (subject k-p) {}) (cert (issuer (name k-k n)) (subject k-p) {})",
        v(1, 2),
        v(3, 4)
    );
    let target = format!("(4tuple k-k n k-p {})", v(1, 4));
    let (status, out, _) = run(&["prove", "--rules", "rs1", "--target", &target], &certs);
    assert_eq!(status, 1);
    assert!(out.contains("NOT DERIVABLE") && out.contains("bound: "));
    let (status, out, _) = run(&["prove", "--rules", "rs2", "--target", &target], &certs);
    assert_eq!(status, 0, "{out}");
    assert!(out.contains("R4"));
}

#[test]
fn target_from_file() {
    let f = temp_file(&format!("(4tuple k-ron doctor k-d {})", v(1, 3)));
    let target = format!("@{}", f.path().display());
    let (status, out, _) = run(&["prove", "--rules", "rs0", "--target", &target], RON_JOE);
    assert_eq!(status, 0, "{out}");
}

#[test]
fn crl_check_overlap() {
    let crls = format!("(crl (issuer k-r) (canceled) {}) (crl (issuer k-r) (canceled) {})", v(0, 5), v(3, 9));
    let (status, out, _) = run(&["crl-check"], &crls);
    assert_eq!(status, 1);
    assert!(out.starts_with("INCONSISTENT"));
    let disjoint = format!("(crl (issuer k-r) (canceled) {}) (crl (issuer k-r) (canceled) {})", v(0, 2), v(3, 9));
    assert_eq!(run(&["crl-check"], &disjoint).0, 0);

    let (status, _, err) = run(&["oracle", "--formula", "(now-in (valid))"], &crls);
    assert_eq!(status, 2);
    assert!(err.contains("overlap"));
}

#[test]
fn usage_errors() {
    let (status, _, err) = run(&["decide", "--issuer", "k-a", "--time", "0"], "");
    assert_eq!(status, 2);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("--subject"));

    let (status, _, err) = run(&["reduce", "--rules", "rs7"], "");
    assert_eq!(status, 2);
    assert!(err.contains("--rules"));

    let (status, _, err) = run(&["decide", "--issuer", "bob", "--subject", "k-a", "--name", "n", "--time", "0"], "");
    assert_eq!(status, 2);
    assert!(err.contains("--issuer"));

    let (status, _, _) = run(&["parse"], "(cert (issuer k-a))");
    assert_eq!(status, 2);
}

#[test]
fn parse_and_canon_are_deterministic() {
    let messy = "(cert (issuer (name k-ron doctor))\n   (subject (name k-joe doctor))\n (valid (not-before 1) (not-after 3)))";
    let (status, canon, _) = run(&["canon"], messy);
    assert_eq!(status, 0);
    assert_eq!(run(&["canon"], &canon).1, canon);
    let (_, a, _) = run(&["parse"], messy);
    let (_, b, _) = run(&["parse"], &canon);
    assert_eq!(a, b);
    assert!(a.ends_with("1 certificates\n"));
}

#[test]
fn reduce_reports_bound() {
    let (status, out, _) = run(&["reduce", "--rules", "rs0"], RON_JOE);
    assert_eq!(status, 0);
    assert!(out.contains(&format!("(4tuple k-ron doctor k-d {})", v(1, 3))));
    assert_eq!(out.lines().last(), Some("bound: 3"));
    let (_, out, _) = run(&["reduce", "--rules", "rs1", "--bound", "5", "--emit-3tuples"], RON_JOE);
    assert!(out.contains("(3tuple"));
    assert!(out.ends_with("bound: 5\n"));
}

#[test]
fn resolve_over_keys() {
    let (status, out, _) = run(&["resolve", "--issuer", "k-ron", "--name", "doctor", "--time", "2"], RON_JOE);
    assert_eq!(status, 0);
    assert_eq!(out.lines().next(), Some("k-d"));
    let (status, _, _) =
        run(&["resolve", "--issuer", "k-ron", "--name", "doctor", "--time", "2", "--keys", "k-x", "k-y"], RON_JOE);
    assert_eq!(status, 1);
}

#[test]
fn witness_run_or_derivable() {
    let (status, out, _) =
        run(&["witness", "--target", &format!("(cert (issuer (name k-ron doctor)) (subject k-d) {})", v(1, 3))], RON_JOE);
    assert_eq!(status, 1);
    assert_eq!(out.trim(), "DERIVABLE");

    let wide = format!("(cert (issuer (name k-ron doctor)) (subject k-d) {})", v(0, 3));
    let (status, out, _) = run(&["witness", "--target", &wide], RON_JOE);
    assert_eq!(status, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("fails at key k-d time 0"));
    let events = decode_run_events(&parse_sexpr(lines.next().unwrap()).unwrap()).unwrap();
    assert!(!events.is_empty());

    let (status, _, err) = run(&["witness", "--target", &wide, "--key-supply", "k-only"], RON_JOE);
    assert_eq!(status, 2, "{err}");
}
