#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

/// Hourly load CSV for `days` days from 2016-01-01; hours listed in `skip` are
/// left out of the given `(day, hour)` slots.
pub fn hourly_feed(days: usize, skip: &[(usize, usize)]) -> String {
    let mut text = String::from("Datetime,AEP_MW\n");
    let start = (2016, 1, 1);
    for d in 0..days {
        let date = add_days(start, d);
        for h in 0..24 {
            if skip.contains(&(d, h)) {
                continue;
            }
            let weekly = 1.0 + 0.1 * ((d % 7) as f64 / 7.0 * std::f64::consts::TAU).sin();
            let seasonal = 1.0 + 0.2 * (d as f64 / 30.0).cos();
            let hourly = 1.0 + 0.25 * ((h as f64 - 6.0) / 24.0 * std::f64::consts::TAU).sin();
            let wiggle = 1.0 + 0.03 * (((d * 24 + h) * 7919 % 1000) as f64 / 1000.0 - 0.5);
            let load = 15000.0 * weekly * seasonal * hourly * wiggle;
            writeln!(text, "{} {h:02}:00:00,{load:.1}", fmt_date(date)).unwrap();
        }
    }
    text
}

type Ymd = (i32, u32, u32);

fn days_in_month(y: i32, m: u32) -> u32 {
    match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        _ if (y % 4 == 0 && y % 100 != 0) || y % 400 == 0 => 29,
        _ => 28,
    }
}

fn add_days((mut y, mut m, mut d): Ymd, k: usize) -> Ymd {
    for _ in 0..k {
        d += 1;
        if d > days_in_month(y, m) {
            d = 1;
            m += 1;
            if m > 12 {
                m = 1;
                y += 1;
            }
        }
    }
    (y, m, d)
}

fn fmt_date((y, m, d): Ymd) -> String {
    format!("{y:04}-{m:02}-{d:02}")
}

pub fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdareg"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// File name to contents for every file in `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}
