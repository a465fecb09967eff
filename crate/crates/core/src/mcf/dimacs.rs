//! DIMACS-style text form of a flow network.
//!
//! ```text
//! c optional comments
//! p min <vertices> <edges>
//! n <vertex> <balance>          one line per non-zero balance
//! a <from> <to> <low> <cap> <cost>
//! ```
//!
//! Vertices are 1-based. Unbounded capacities are written as total supply
//! plus one, which no feasible flow can reach.

use std::io::Write;

use super::LinearFlowNetwork;
use crate::error::{Error, Result};

pub fn write_dimacs<W: Write>(net: &LinearFlowNetwork, mut w: W) -> Result<()> {
    writeln!(w, "p min {} {}", net.vertex_count(), net.edges.len())?;
    for (v, &b) in net.balance.iter().enumerate() {
        if b != 0 {
            writeln!(w, "n {} {}", v + 1, b)?;
        }
    }
    for e in &net.edges {
        writeln!(
            w,
            "a {} {} 0 {} {}",
            e.from + 1,
            e.to + 1,
            net.effective_cap(e),
            e.cost
        )?;
    }
    Ok(())
}

pub fn parse_dimacs(text: &str) -> Result<LinearFlowNetwork> {
    let mut net: Option<LinearFlowNetwork> = None;
    for (lineno, line) in text.lines().enumerate() {
        let at = |msg: &str| Error::invalid(format!("line {}", lineno + 1), msg.to_string());
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first().copied() {
            None | Some("c") => {}
            Some("p") => {
                if fields.len() != 4 || fields[1] != "min" {
                    return Err(at("expected `p min <vertices> <edges>`"));
                }
                let n: usize = fields[2].parse().map_err(|_| at("bad vertex count"))?;
                net = Some(LinearFlowNetwork::new(vec![0; n]));
            }
            Some("n") => {
                let net = net.as_mut().ok_or_else(|| at("`n` before `p`"))?;
                if fields.len() != 3 {
                    return Err(at("expected `n <vertex> <balance>`"));
                }
                let v = vertex(fields[1], net.vertex_count()).ok_or_else(|| at("bad vertex"))?;
                net.balance[v] = fields[2].parse().map_err(|_| at("bad balance"))?;
            }
            Some("a") => {
                let net = net.as_mut().ok_or_else(|| at("`a` before `p`"))?;
                if fields.len() != 6 {
                    return Err(at("expected `a <from> <to> <low> <cap> <cost>`"));
                }
                let n = net.vertex_count();
                let from = vertex(fields[1], n).ok_or_else(|| at("bad tail vertex"))?;
                let to = vertex(fields[2], n).ok_or_else(|| at("bad head vertex"))?;
                if fields[3] != "0" {
                    return Err(at("lower bounds must be 0"));
                }
                let cap: i64 = fields[4].parse().map_err(|_| at("bad capacity"))?;
                let cost: f64 = fields[5].parse().map_err(|_| at("bad cost"))?;
                net.add_edge(from, to, Some(cap), cost);
            }
            Some(_) => return Err(at("unknown line type")),
        }
    }
    net.ok_or_else(|| Error::invalid("p", "missing problem line"))
}

fn vertex(field: &str, n: usize) -> Option<usize> {
    let v: usize = field.parse().ok()?;
    (1..=n).contains(&v).then(|| v - 1)
}
