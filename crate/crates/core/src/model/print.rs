//! Canonical text form of a network. `parse_network(print_network(n)) == n`.

use std::fmt::Write;

use super::{RateLaw, ReactionNetwork};

pub fn print_network(net: &ReactionNetwork) -> String {
    let names = net.species_names();
    let mut out = String::new();
    if !first_appearance_matches(net) {
        let _ = writeln!(out, "species {}", names.join(", "));
    }
    for (name, value) in net.constants() {
        let _ = writeln!(out, "let {name} = {value};");
    }
    for rx in net.reactions() {
        let _ = write!(out, "{} -> {} @ ", rx.source.render(&names), rx.product.render(&names));
        match &rx.rate {
            RateLaw::MassAction { expr, .. } => {
                let _ = write!(out, "ma({})", expr.display(&names));
            }
            RateLaw::Expression(law) => {
                let _ = write!(out, "expr({})", law.expr.display(&names));
                if let Some(p) = law.scale {
                    let _ = write!(out, " scale N^{p}");
                }
                if let Some(l) = &law.limit {
                    let _ = write!(out, " limit({})", l.display(&names));
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Whether re-parsing without a `species` line would reproduce the order.
fn first_appearance_matches(net: &ReactionNetwork) -> bool {
    let mut seen = Vec::new();
    for rx in net.reactions() {
        for c in [&rx.source, &rx.product] {
            for (i, _) in c.iter() {
                if !seen.contains(&i) {
                    seen.push(i);
                }
            }
        }
    }
    seen.len() == net.num_species() && seen.iter().enumerate().all(|(k, &i)| k == i)
}

#[cfg(test)]
mod tests {
    use super::super::parse_network;
    use super::*;

    #[test]
    fn round_trips_mixed_network() {
        let src = "let k0 = 0.5;\nlet k1 = 1;\n\
                   A + 2B -> 3B @ expr(k0 * x[A] * x[B] * (x[B] - 1) / (1 + x[B])) scale N^-1 limit(k0 * x[A] * x[B])\n\
                   B <-> C @ ma(k1, 2 * k1)\nC -> A @ ma(1e-3)\n";
        let net = parse_network(src).unwrap();
        let printed = print_network(&net);
        assert_eq!(parse_network(&printed).unwrap(), net);
        assert_eq!(print_network(&parse_network(&printed).unwrap()), printed);
    }

    #[test]
    fn species_line_emitted_when_order_differs() {
        let net = parse_network("species B, A\nA -> B @ ma(1)").unwrap();
        let printed = print_network(&net);
        assert!(printed.starts_with("species B, A\n"));
        assert_eq!(parse_network(&printed).unwrap(), net);
    }
}
