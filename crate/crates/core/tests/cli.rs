use dslab::cli;

fn run(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("dslab").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn block_build_verify_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("block.cert");
    let p = path.to_str().unwrap();
    let (code, out, err) = run(&[
        "block", "build", "--f", "scaled:inv_bits:1/8", "--eps", "1/4", "--M", "0", "--mode", "empirical", "--out", p,
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("certified=false"), "{out}");

    // Structural checks pass; the ε target is missed at this size.
    let (code, out, err) = run(&["block", "verify", "--cert", p]);
    assert_eq!(code, 1);
    assert!(out.contains("PASS mass in window"), "{out}");
    assert!(out.contains("PASS union measure ≤ overlap sum"), "{out}");
    assert!(err.starts_with("error kind=VerificationFailed"), "{err}");

    let (code, out, _) = run(&["report", "--cert", p]);
    assert_eq!(code, 0);
    assert!(out.starts_with("certificate block"));
    assert!(out.contains("S ⊂ (M, ∞)"));
}

#[test]
fn tampered_certificate_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("block.cert");
    let p = path.to_str().unwrap();
    let (code, _, _) = run(&["block", "build", "--f", "scaled:inv_bits:1/8", "--eps", "1/4", "--M", "0", "--mode", "empirical", "--out", p]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let line = text.lines().find(|l| l.starts_with("mass ")).unwrap().to_string();
    std::fs::write(&path, text.replace(&line, "mass 3/2")).unwrap();
    let (code, out, _) = run(&["block", "verify", "--cert", p]);
    assert_eq!(code, 1);
    assert!(out.contains("FAIL mass recomputed"), "{out}");
}

#[test]
fn psi_build_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.cert");
    let p = path.to_str().unwrap();
    let (code, out, err) = run(&["psi", "build", "--f", "power:1:1", "--j-max", "2", "--out", p]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("Q=5,84"), "{out}");
    let (code, out, err) = run(&["psi", "verify", "--cert", p, "--checkpoints", "100"]);
    assert_eq!(code, 0, "{out}{err}");
    assert!(!out.contains("FAIL"));
}

#[test]
fn inhom_build_with_samples_and_thread_independence() {
    let args = ["inhom", "build", "--f", "scaled:inv_bits:1/8", "--eps", "1/4", "--M", "0", "--b", "2", "--I", "1", "--mode", "empirical", "--samples", "2"];
    let (c1, o1, e1) = run(&[&args[..], &["--threads", "1"]].concat());
    let (c4, o4, _) = run(&[&args[..], &["--threads", "4"]].concat());
    assert_eq!(c1, 0, "{e1}");
    assert_eq!(c4, 0);
    assert_eq!(o1, o4);
    assert!(o1.starts_with("dslab-cert v1 inhom"));
}

#[test]
fn primes_and_ysystem() {
    let (code, out, _) = run(&["primes", "--j", "5"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("I 18,"), "{out}");
    let (code, out, _) = run(&["ysystem", "--I", "1,2", "--survivors"]);
    assert_eq!(code, 0);
    assert!(out.contains("survivors y=21 count=12"), "{out}");
}

#[test]
fn usage_and_input_errors() {
    let (code, _, err) = run(&["block", "build", "--eps", "1/4"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error kind=Usage"));
    let (code, _, err) = run(&["block", "build", "--f", "nonsense", "--eps", "1/4"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error kind=Parse"), "{err}");
    let (code, _, err) = run(&["sgamma", "build", "--f", "power:1:1", "--gamma", "0.25"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error kind=UnsupportedInput"), "{err}");
}
