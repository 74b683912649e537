//! gnuplot data and script pairs.

use std::path::Path;

use tmsv::witness::{marginal, Mode};
use tmsv::JointPnd;

use crate::io::{fmt_f64, write_text};
use crate::CliError;

pub fn joint(dir: &Path, stem: &str, pnd: &JointPnd, title: &str) -> Result<(), CliError> {
    let mut data = String::from("# n m p\n");
    for (n, row) in pnd.rows().iter().enumerate() {
        for (m, p) in row.iter().enumerate() {
            data.push_str(&format!("{n} {m} {}\n", fmt_f64(*p)));
        }
        data.push('\n');
    }
    write_text(&dir.join(format!("{stem}.dat")), &data)?;
    let script = format!(
        "set title '{title}'\nset xlabel 'n (signal)'\nset ylabel 'm (idler)'\n\
         set view map\nset size square\nset palette rgb 33,13,10\n\
         splot '{stem}.dat' using 1:2:3 with image notitle\npause -1\n"
    );
    write_text(&dir.join(format!("{stem}.gp")), &script)
}

pub fn marginals(dir: &Path, stem: &str, pnd: &JointPnd) -> Result<(), CliError> {
    let s = marginal(pnd, Mode::Signal);
    let i = marginal(pnd, Mode::Idler);
    let mut data = String::from("# n signal idler\n");
    for n in 0..s.len() {
        data.push_str(&format!("{n} {} {}\n", fmt_f64(s[n]), fmt_f64(i[n])));
    }
    write_text(&dir.join(format!("{stem}.dat")), &data)?;
    let script = format!(
        "set xlabel 'clicks'\nset ylabel 'probability'\nset style fill solid 0.5\nset boxwidth 0.4\n\
         plot '{stem}.dat' using ($1-0.2):2 with boxes title 'signal', \\\n     \
         '{stem}.dat' using ($1+0.2):3 with boxes title 'idler'\npause -1\n"
    );
    write_text(&dir.join(format!("{stem}.gp")), &script)
}

pub fn histogram(dir: &Path, stem: &str, energies: &[f64], bins: usize) -> Result<(), CliError> {
    let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let mut counts = vec![0u64; bins];
    for &e in energies {
        counts[(((e - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let mut data = String::from("# energy count\n");
    for (b, c) in counts.iter().enumerate() {
        data.push_str(&format!("{} {c}\n", fmt_f64(lo + (b as f64 + 0.5) * width)));
    }
    write_text(&dir.join(format!("{stem}.dat")), &data)?;
    let script = format!(
        "set xlabel 'pulse energy'\nset ylabel 'counts'\nset logscale y\n\
         plot '{stem}.dat' using 1:2 with steps notitle\npause -1\n"
    );
    write_text(&dir.join(format!("{stem}.gp")), &script)
}
