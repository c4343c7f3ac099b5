//! A hand-written per-node program on the round simulator: every node
//! floods the largest id it has seen and stops once its value is stable
//! for one round. The same program runs in both models.

use sleepy::graph::{gen_graph, Family, GraphSpec, WeightMode};
use sleepy::sim::{Message, Model, Outbox, Program, Wake};
use sleepy::{run_simulation, NodeId, SimConfig};

struct MaxFlood {
    nbrs: Vec<NodeId>,
    best: u64,
    changed: bool,
}

impl Program for MaxFlood {
    fn protocol(&self) -> &'static str {
        "max-flood"
    }

    fn start(&mut self) -> Wake {
        Wake::At(1)
    }

    fn send(&mut self, _round: u64, out: &mut Outbox) {
        if self.changed {
            for &u in &self.nbrs {
                out.send(u, Message::new(1, vec![self.best]));
            }
        }
    }

    fn receive(&mut self, round: u64, inbox: &[(NodeId, Message)]) -> Wake {
        let heard = inbox.iter().map(|(_, m)| m.payload[0]).max().unwrap_or(0);
        self.changed = heard > self.best;
        self.best = self.best.max(heard);
        if self.changed || round == 1 {
            self.changed = true;
            Wake::next(round)
        } else {
            Wake::Done
        }
    }
}

fn main() -> sleepy::Result<()> {
    let g = gen_graph(&GraphSpec::new(Family::Grid, 49, WeightMode::Unit, 0))?;
    for model in [Model::Congest, Model::Sleeping] {
        let cfg = SimConfig::new(model, sleepy::sim::default_budget(&g));
        let out = run_simulation(&g, &cfg, |v| MaxFlood {
            nbrs: g.neighbors(v).iter().map(|a| a.to).collect(),
            best: v as u64,
            changed: true,
        })?;
        let agreed = out.programs.iter().all(|p| p.best == 48);
        println!(
            "{model:?}: rounds {} messages {} max energy {} all agree: {agreed}",
            out.report.rounds,
            out.report.messages,
            out.report.max_energy()
        );
    }
    Ok(())
}
