use serde_json::Value;
use skysheaf_cli::run;

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn call(args: &[&str]) -> (i32, Value) {
    let out = run(std::iter::once("skysheaf").chain(args.iter().copied()));
    (out.code, out.report)
}

#[test]
fn two_disjoint_cohomology() {
    let (code, r) = call(&["cohomology", "--cover", &fixture("two_disjoint.json")]);
    assert_eq!(code, 0);
    assert_eq!(r["results"][0]["cohomology"]["h"], serde_json::json!([2, 0]));
    assert_eq!(r["schema"], 1);
}

#[test]
fn sumpool_attack() {
    let (code, r) = call(&[
        "witness",
        "thm4.2",
        "--net",
        &fixture("sumpool.json"),
        "--p",
        "2",
        "--delta",
        "4",
        "--seed",
        "7",
    ]);
    assert_eq!(code, 0);
    let report = &r["reports"][0];
    assert_eq!(report["claim"], "thm4.2");
    let d = report["measured"]["displacement"].as_f64().unwrap();
    assert!((d - 18f64.sqrt()).abs() < 1e-12);
}

#[test]
fn explicit_perturbation() {
    let net = fixture("sumpool.json");
    let (code, r) = call(&[
        "witness",
        "thm4.2",
        "--net",
        &net,
        "--perturbation",
        "3,-3,1/2,-1/2",
        "--delta",
        "1",
    ]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["reports"][0]["measured"]["shifts"][2][0], "1/2");
    let (code, _) = call(&["witness", "thm4.2", "--net", &net, "--perturbation", "1,0,0,0"]);
    assert_eq!(code, 2);
}

#[test]
fn cycles_are_indistinguishable() {
    let (code, r) = call(&["wl-compare", &fixture("c6.json"), &fixture("2c3.json"), "--depth", "6"]);
    assert_eq!(code, 0);
    assert_eq!(r["distinguishable"], false);
    let (code, r) = call(&["wl-compare", &fixture("p3.txt"), &fixture("c3.txt"), "--depth", "1"]);
    assert_eq!(code, 0);
    assert_eq!(r["distinguishable"], true);
}

#[test]
fn exit_codes() {
    assert_eq!(call(&["axioms", "--cover", &fixture("axioms_421.json")]).0, 0);
    assert_eq!(call(&["axioms", "--cover", &fixture("attention_stages.json")]).0, 1);
    assert_eq!(call(&["axioms", "--cover", &fixture("malformed.json")]).0, 2);
    assert_eq!(call(&["axioms", "--cover", &fixture("missing.json")]).0, 2);
    assert_eq!(
        call(&["witness", "thm4.2", "--net", &fixture("bijective_pair.json")]).0,
        2
    );
    assert_eq!(call(&["witness", "glue"]).0, 2);
    assert_eq!(call(&["frobnicate"]).0, 2);
}

#[test]
fn witnesses_on_fixtures() {
    for claim in ["prop2.8", "glue", "kernel"] {
        let (code, r) = call(&["witness", claim, "--cover", &fixture("chain3.json")]);
        assert_eq!(code, 0, "{claim}: {r}");
    }
    let (code, r) = call(&["witness", "thm4.3", "--net", &fixture("sumpool_identity.json")]);
    assert_eq!(code, 0);
    assert_eq!(r["reports"][0]["measured"]["class"], "open_bijective");
}

#[test]
fn demos_pass() {
    for kind in ["cnn", "rnn", "attention"] {
        let (code, r) = call(&["demo", kind]);
        assert_eq!(code, 0, "{kind}: {r}");
    }
}

#[test]
fn out_file_matches_stdout() {
    let path = std::env::temp_dir().join(format!("skysheaf-out-{}.json", std::process::id()));
    let args = [
        "cohomology",
        "--cover",
        &fixture("chain3.json"),
        "--out",
        path.to_str().unwrap(),
    ];
    let out = run(std::iter::once("skysheaf").chain(args.iter().copied()));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), out.render());
    std::fs::remove_file(path).unwrap();
}
