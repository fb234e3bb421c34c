//! Green-red TGD chase and the spider / swarm / green-graph abstraction
//! ladder used to study finite versus unrestricted determinacy of
//! conjunctive queries, plus rainworm machines and the finite counter-model
//! construction built on top of them.

pub mod chase;
pub mod labgraph;
pub mod relcore;
pub mod spider;
pub mod greengraph;
pub mod rewrite;
pub mod swarm;
pub mod codes;
pub mod sepexample;
pub mod rainworm;
pub mod report;
pub mod cli;
