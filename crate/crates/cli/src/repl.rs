//! Terminal token game: a number fires that enabled entry, `u` undoes,
//! `r` resets and `q` quits.

use std::io::{self, BufRead, Write};

use atcg_client::Client;
use atcg_core::bridge::StateDto;
use atcg_core::petri::cmp_ids;
use atcg_core::sim::{Choice, SimSession};

pub trait Backend {
    fn state(&mut self) -> Result<StateDto, String>;
    fn step(&mut self, choice: Choice) -> Result<StateDto, String>;
}

impl Backend for SimSession {
    fn state(&mut self) -> Result<StateDto, String> {
        Ok(StateDto::from_session(self))
    }

    fn step(&mut self, choice: Choice) -> Result<StateDto, String> {
        SimSession::step(self, choice).map_err(|e| e.to_string())?;
        Ok(StateDto::from_session(self))
    }
}

pub struct Remote {
    client: Client,
    rt: tokio::runtime::Runtime,
}

impl Remote {
    pub fn new(url: &str) -> io::Result<Remote> {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
        Ok(Remote {
            client: Client::new(url),
            rt,
        })
    }
}

impl Backend for Remote {
    fn state(&mut self) -> Result<StateDto, String> {
        self.rt.block_on(self.client.state()).map_err(|e| e.to_string())
    }

    fn step(&mut self, choice: Choice) -> Result<StateDto, String> {
        let c = &self.client;
        let r = match choice {
            Choice::Index(i) => self.rt.block_on(c.fire(i)),
            Choice::Undo => self.rt.block_on(c.undo()),
            Choice::Reset => self.rt.block_on(c.reset()),
        };
        r.map_err(|e| e.to_string())
    }
}

pub fn render(s: &StateDto) -> String {
    let mut places: Vec<_> = s.marking.iter().collect();
    places.sort_by(|a, b| cmp_ids(a.0, b.0));
    let marking: Vec<String> = places.iter().map(|(p, ts)| format!("{p}: {}", ts.join(", "))).collect();
    let mut out = format!("marking: {{{}}}\n", marking.join("; "));
    if !s.history.is_empty() {
        let calls: Vec<&str> = s.history.iter().map(|f| f.call.as_str()).collect();
        out.push_str(&format!("history: {}\n", calls.join(", ")));
    }
    if s.enabled.is_empty() {
        out.push_str("no enabled transitions\n");
    }
    for (i, f) in s.enabled.iter().enumerate() {
        out.push_str(&format!("  {i}: {} [{}]\n", f.call, f.transition));
    }
    out
}

pub fn run(backend: &mut dyn Backend, input: impl BufRead, out: &mut impl Write) -> io::Result<()> {
    match backend.state() {
        Ok(s) => write!(out, "{}", render(&s))?,
        Err(e) => return Err(io::Error::other(e)),
    }
    let mut lines = input.lines();
    loop {
        write!(out, "> ")?;
        out.flush()?;
        let Some(line) = lines.next().transpose()? else {
            writeln!(out)?;
            return Ok(());
        };
        let choice = match line.trim() {
            "" => continue,
            "q" => return Ok(()),
            "u" => Choice::Undo,
            "r" => Choice::Reset,
            n => match n.parse() {
                Ok(i) => Choice::Index(i),
                Err(_) => {
                    writeln!(out, "expected a number, u, r or q")?;
                    continue;
                }
            },
        };
        match backend.step(choice) {
            Ok(s) => write!(out, "{}", render(&s))?,
            Err(e) => writeln!(out, "error: {e}")?,
        }
    }
}
