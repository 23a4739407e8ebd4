use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn atcg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atcg")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.xml");
    std::fs::write(&garbage, "<pnml><net").unwrap();
    let bad_model = dir.path().join("bad.xml");
    std::fs::write(
        &bad_model,
        std::fs::read_to_string(fixture("login.xml")).unwrap().replace(
            "<arg>PSWD</arg>\n    </message>\n    <message id=\"m3\"",
            "</message>\n    <message id=\"m3\"",
        ),
    )
    .unwrap();

    assert_eq!(atcg(&["validate", &fixture("login.xml")]).status.code(), Some(0));
    assert_eq!(atcg(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(atcg(&["tests"]).status.code(), Some(1));
    assert_eq!(atcg(&["--help"]).status.code(), Some(0));
    assert_eq!(atcg(&["compile", garbage.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(atcg(&["tests", "/no/such/file"]).status.code(), Some(2));
    assert_eq!(atcg(&["compile", &fixture("dangling.pnml")]).status.code(), Some(3));
    assert_eq!(atcg(&["validate", bad_model.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(
        atcg(&["tests", &fixture("coffee.pnml"), "--max-depth", "2"])
            .status
            .code(),
        Some(4)
    );
    let o = atcg(&[
        "code",
        &fixture("login.xml"),
        "--template",
        "nope",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown-template"));
}

#[test]
fn validate_reports_diagnostics_on_stderr() {
    let o = atcg(&["validate", &fixture("vending.xml")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("valid"));
}

#[test]
fn build_then_tests_equals_one_shot() {
    let dir = tempfile::tempdir().unwrap();
    for model in ["login.xml", "alt.xml", "par.xml", "vending.xml"] {
        let net = dir.path().join(model);
        let net = net.to_str().unwrap();
        assert!(atcg(&["build", &fixture(model), "-o", net]).status.success());
        for extra in [&[][..], &["--all"][..], &["--all", "--traces"][..]] {
            let a = atcg(&[&["tests", net][..], extra].concat());
            let b = atcg(&[&["tests", &fixture(model)][..], extra].concat());
            assert_eq!(stdout(&a), stdout(&b), "{model} {extra:?}");
        }
    }
}

#[test]
fn compile_summarizes_a_net() {
    let o = atcg(&["compile", &fixture("coffee.pnml")]);
    assert_eq!(stdout(&o), "coffee: 8 places, 7 transitions, 15 arcs\n");
}

#[test]
fn reach_lists_states_and_edges() {
    let o = atcg(&["reach", &fixture("coffee.pnml")]);
    let out = stdout(&o);
    assert!(out.starts_with("states: 9\nm0 {p0: Default}\n"));
    assert!(out.contains("edges: 11\nm0 -T1-> m1\n"));
}

#[test]
fn tree_json_nests_vertices() {
    let o = atcg(&["tree", &fixture("coffee.pnml"), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["root"]["state"], "m0");
    assert_eq!(v["root"]["children"].as_array().unwrap().len(), 2);
    assert_eq!(v["truncated"], false);
}

#[test]
fn code_uses_template_directory() {
    let dir = tempfile::tempdir().unwrap();
    let tdir = dir.path().join("templates");
    std::fs::create_dir(&tdir).unwrap();
    std::fs::write(
        tdir.join("plain.txt.tmpl"),
        "# {{net}}\n---\n{{tests}}\n---\ntest {{n}}\n  {{calls}}\n",
    )
    .unwrap();
    let out: PathBuf = dir.path().join("out.txt");
    let o = atcg(&[
        "code",
        &fixture("par.xml"),
        "--template",
        "plain",
        "--template-dir",
        tdir.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(
        std::fs::read_to_string(out).unwrap(),
        "# brewer\ntest 1\n  heat()\n  grind()\ntest 2\n  grind()\n  heat()\n"
    );
}

fn simulate(args: &[&str], input: &str) -> String {
    let mut child = Command::new(env!("CARGO_BIN_EXE_atcg"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    String::from_utf8(child.wait_with_output().unwrap().stdout).unwrap()
}

#[test]
fn simulate_transcript_replays() {
    let login = fixture("login.xml");
    let input = "0\n0\n0\nu\nr\n5\nq\n";
    let first = simulate(&["simulate", &login], input);
    assert_eq!(first, simulate(&["simulate", &login], input));
    assert!(first.contains("history: enterName(UID), enterPassword(PSWD), login(UID, PSWD)\nno enabled transitions"));
    assert!(first.contains("error: bad-choice"));
}

#[test]
fn simulate_connects_to_serve() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let mut server = Command::new(env!("CARGO_BIN_EXE_atcg"))
        .args(["serve", &fixture("login.xml"), "--port", "1"])
        .env("ATCG_PORT", port.to_string())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(server.stderr.take().unwrap()).lines();
    let ready = lines
        .by_ref()
        .map(Result::unwrap)
        .find(|l| l.starts_with("listening on"))
        .unwrap();
    assert!(ready.ends_with(&format!(":{port}")));
    std::thread::spawn(move || lines.for_each(drop));

    let url = format!("http://127.0.0.1:{port}");
    let remote = simulate(&["simulate", "--connect", &url], "0\n0\n0\nq\n");
    server.kill().unwrap();
    server.wait().unwrap();
    let local = simulate(&["simulate", &fixture("login.xml")], "0\n0\n0\nq\n");
    assert_eq!(remote, local);
}
