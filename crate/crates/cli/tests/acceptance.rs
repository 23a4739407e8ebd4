//! Acceptance suite: one PASS/FAIL line per criterion.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use atcg_core::codegen::render;
use atcg_core::fixtures;
use atcg_core::netgen::NetgenOptions;
use atcg_core::petri::{fire, reach_graph, test_tree, Bounds, Marking, PrTNet};
use atcg_core::pipeline::load_net;
use atcg_core::pnml::{read_pnml, write_pnml};
use atcg_core::testgen::{format_model_tests, scenarios, Scenario, TestSuite};
use atcg_core::testkit::random_net_seeded;

const LOGIN_TESTS: &str = "Model-Level Tests\n1. enterName(UID), enterPassword(PSWD), login(UID, PSWD)\n";

const COFFEE_TRACES: [&str; 11] = [
    "m0->T1->m1",
    "m0->T1->m1->T2->m0",
    "m0->T3->m2",
    "m0->T3->m2->T4->m3",
    "m0->T3->m2->T4->m3->T5->m4",
    "m0->T3->m2->T4->m3->T5->m4->T6->m7",
    "m0->T3->m2->T4->m3->T5->m4->T7->m8",
    "m0->T3->m2->T4->m3->T6->m5",
    "m0->T3->m2->T4->m3->T7->m6",
    "m0->T3->m2->T4->m3->T7->m6->T5->m8",
    "m0->T3->m2->T4->m3->T6->m5->T5->m7",
];

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn atcg(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_atcg"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot run atcg: {e}"))?;
    let stdout = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), stdout))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_second(start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(t)
}

fn model_net(src: &str) -> PrTNet {
    load_net(src.as_bytes(), NetgenOptions::default()).expect("fixture compiles")
}

fn suite_of(net: &PrTNet, bounds: &Bounds) -> TestSuite {
    scenarios(&test_tree(net, bounds), net)
}

fn login_end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let net = dir.path().join("login-net.xml");
    let start = Instant::now();
    let model = fixture("login.xml");
    let (code, _) = atcg(&["build", model.to_str().unwrap(), "-o", net.to_str().unwrap()])?;
    ensure(code == 0, || format!("build exited {code}"))?;
    let (code, out) = atcg(&["tests", net.to_str().unwrap()])?;
    let t = within_second(start)?;
    ensure(code == 0, || format!("tests exited {code}"))?;
    ensure(out == LOGIN_TESTS, || format!("got {out:?}"))?;
    Ok(format!("byte-exact in {t:?}"))
}

fn pnml_dialect() -> Check {
    let net = model_net(fixtures::LOGIN_MODEL);
    let bytes = write_pnml(&net);
    let text = String::from_utf8_lossy(&bytes);
    for needle in [
        "INIT name(UID), password(PSWD)",
        "<tokenclass id=\"Default\"",
        "<value>Default,</value>",
        "<value>(UID),</value>",
    ] {
        ensure(text.contains(needle), || format!("login net lacks `{needle}`"))?;
    }
    let back = read_pnml(&bytes).map_err(|e| e.to_string())?;
    ensure(back == net, || "login net does not read back identically".into())?;
    for seed in 0..100 {
        let n = random_net_seeded(seed);
        let w1 = write_pnml(&n);
        let r = read_pnml(&w1).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(r == n, || format!("seed {seed}: structure changed"))?;
        ensure(write_pnml(&r) == w1, || format!("seed {seed}: bytes changed"))?;
    }
    Ok("login labels present; 100 random nets idempotent".into())
}

fn coffee_oracle() -> Check {
    let start = Instant::now();
    let path = fixture("coffee.pnml");
    let (code, out) = atcg(&["tests", path.to_str().unwrap(), "--all", "--traces"])?;
    let t = within_second(start)?;
    ensure(code == 0, || format!("exited {code}"))?;
    let got: Vec<&str> = out
        .lines()
        .filter_map(|l| l.split_once('\t').map(|(_, tr)| tr))
        .collect();
    ensure(got.len() == 11, || format!("{} scenarios", got.len()))?;
    let got: BTreeSet<&str> = got.into_iter().collect();
    let want: BTreeSet<&str> = COFFEE_TRACES.into_iter().collect();
    ensure(got == want, || {
        format!(
            "traces differ: {:?}",
            got.symmetric_difference(&want).collect::<Vec<_>>()
        )
    })?;
    let to_m8 = got.iter().filter(|t| t.ends_with("m8")).count();
    ensure(to_m8 == 2, || "m8 is not reached by two paths".into())?;
    ensure(got.contains("m0->T1->m1->T2->m0"), || "no round trip to m0".into())?;
    let (_, all) = atcg(&["tests", path.to_str().unwrap(), "--all"])?;
    ensure(all.lines().count() == 12, || {
        "tests --all does not list 11 scenarios".into()
    })?;
    Ok(format!("11 traces match in {t:?}"))
}

fn reachability_oracle() -> Check {
    let bounds = Bounds {
        max_depth: 8,
        max_states: 1_000_000,
        loop_unroll: None,
    };
    let mut total = 0;
    for seed in 1000..1100 {
        let net = random_net_seeded(seed);
        let g = reach_graph(&net, &bounds);
        let ours: Vec<_> = g
            .states
            .iter()
            .map(oracle::state_of)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let theirs = oracle::reachable(&net, 8);
        ensure(ours == theirs, || {
            format!("seed {seed}: {} vs {} states", ours.len(), theirs.len())
        })?;
        total += ours.len();
    }
    Ok(format!("100 nets, {total} states in total"))
}

fn replays(net: &PrTNet, suite: &TestSuite) -> Result<usize, String> {
    for s in &suite.scenarios {
        let mut m = Marking::initial(net);
        for f in &s.firings {
            m = fire(net, &m, &f.transition, &f.binding)
                .map_err(|e| format!("{}: {} in {}", net.id, e.code(), s.trace()))?;
        }
    }
    Ok(suite.scenarios.len())
}

fn replay_property() -> Check {
    let mut count = 0;
    for (_, src) in fixtures::MODELS {
        let net = model_net(src);
        count += replays(&net, &suite_of(&net, &Bounds::default()))?;
    }
    let coffee = read_pnml(fixtures::COFFEE_NET.as_bytes()).map_err(|e| e.to_string())?;
    count += replays(&coffee, &suite_of(&coffee, &Bounds::default()))?;
    let bounds = Bounds {
        max_depth: 6,
        ..Bounds::default()
    };
    let mut seed = 2000;
    while count < 500 || seed < 2100 {
        let net = random_net_seeded(seed);
        count += replays(&net, &suite_of(&net, &bounds))?;
        seed += 1;
    }
    Ok(format!("{count} scenarios replayed"))
}

fn maximal_calls(suite: &TestSuite) -> BTreeSet<Vec<String>> {
    suite.maximal().map(Scenario::calls).collect()
}

fn fragment_mapping() -> Check {
    let alt = model_net(fixtures::ALT_MODEL);
    let suite = suite_of(&alt, &Bounds::default());
    let calls = maximal_calls(&suite);
    let want: BTreeSet<Vec<String>> = [vec!["check(1)".to_string(), "approve()".to_string()]].into();
    ensure(calls == want, || format!("alt: {calls:?}"))?;
    ensure(
        suite
            .scenarios
            .iter()
            .all(|s| !s.calls().iter().any(|c| c.starts_with("reject"))),
        || "alt: else branch appears".into(),
    )?;
    let par = model_net(fixtures::PAR_MODEL);
    let calls = maximal_calls(&suite_of(&par, &Bounds::default()));
    let want: BTreeSet<Vec<String>> = [
        vec!["heat()".to_string(), "grind()".to_string()],
        vec!["grind()".to_string(), "heat()".to_string()],
    ]
    .into();
    ensure(calls == want, || format!("par: {calls:?}"))?;
    Ok("alt keeps the guarded branch; par has both orders".into())
}

fn codegen_golden() -> Check {
    let net = model_net(fixtures::LOGIN_MODEL);
    let suite = suite_of(&net, &Bounds::default()).maximal_suite();
    let script = render(&suite, "fixture-style").map_err(|e| e.to_string())?;
    ensure(script.file_name == "loginTester_RT.cs", || script.file_name.clone())?;
    let body = &script.body;
    ensure(body.contains("class loginTester_RT"), || "no fixture identifier".into())?;
    ensure(body.contains("public void Init()"), || "no setup routine".into())?;
    ensure(body.contains("private void Assert("), || "no assertion helper".into())?;
    ensure(body.matches("[Test]").count() == 1, || {
        "not exactly one test routine".into()
    })?;
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/loginTester_RT.cs");
    let golden = std::fs::read_to_string(&golden_path).map_err(|e| e.to_string())?;
    ensure(*body == golden, || "body differs from the golden file".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = fixture("login.xml");
    let (code, _) = atcg(&["code", model.to_str().unwrap(), "-o", dir.path().to_str().unwrap()])?;
    ensure(code == 0, || format!("code exited {code}"))?;
    let written = std::fs::read_to_string(dir.path().join("loginTester_RT.cs")).map_err(|e| e.to_string())?;
    ensure(written == golden, || "CLI output differs from the golden file".into())?;
    Ok("matches golden file".into())
}

fn pipeline_run(input: &Path, dir: &Path) -> Result<Vec<Vec<u8>>, String> {
    let i = input.to_str().unwrap();
    let net = dir.join("net.xml");
    let script_dir = dir.join("code");
    std::fs::create_dir_all(&script_dir).map_err(|e| e.to_string())?;
    let mut artifacts = Vec::new();
    let net_input = if i.ends_with(".xml") {
        let (code, _) = atcg(&["build", i, "-o", net.to_str().unwrap()])?;
        ensure(code == 0, || format!("build {i} exited {code}"))?;
        artifacts.push(std::fs::read(&net).map_err(|e| e.to_string())?);
        net.to_str().unwrap().to_string()
    } else {
        i.to_string()
    };
    for args in [vec!["tests", &net_input], vec!["tests", &net_input, "--all"]] {
        let (_, out) = atcg(&args)?;
        artifacts.push(out.into_bytes());
    }
    let (_, out) = atcg(&["code", &net_input, "--all", "-o", script_dir.to_str().unwrap()])?;
    artifacts.push(std::fs::read(out.trim()).map_err(|e| e.to_string())?);
    Ok(artifacts)
}

fn determinism() -> Check {
    let inputs = ["login.xml", "alt.xml", "par.xml", "vending.xml", "coffee.pnml"];
    for name in inputs {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        let first = pipeline_run(&fixture(name), a.path())?;
        let second = pipeline_run(&fixture(name), b.path())?;
        ensure(first == second, || format!("{name}: artifacts differ"))?;
    }
    let tests = |src: &str| format_model_tests(&suite_of(&model_net(src), &Bounds::default()), false);
    ensure(tests(fixtures::VENDING_MODEL) == tests(fixtures::VENDING_MODEL), || {
        "in-process run differs".into()
    })?;
    Ok(format!("{} fixtures byte-identical across two runs", inputs.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("login end-to-end", login_end_to_end),
        ("PNML dialect", pnml_dialect),
        ("coffee-machine oracle", coffee_oracle),
        ("reachability oracle", reachability_oracle),
        ("scenario replay", replay_property),
        ("fragment mapping", fragment_mapping),
        ("codegen golden", codegen_golden),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:?}",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
