//! Serve a synthetic fit over HTTP.
//!
//!     cargo run --release --example serve_api -- [127.0.0.1:8080]
//!     curl localhost:8080/athletes
//!     curl -X POST localhost:8080/simulate -d '{"quantiles":[0.9,0.9,0.9,0.9,0.9,0.9,0.9,0.9,0.9,0.9],"threshold":8500}'

mod common;

use decathlon::gateway::server::serve;
use decathlon::gateway::{Api, ApiConfig};
use decathlon::inference::Family;

fn main() -> decathlon::Result<()> {
    let addr = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "127.0.0.1:8080".into())
        .parse()
        .map_err(|e| decathlon::Error::InvalidConfig(format!("bad address: {e}")))?;
    let data = common::dataset(80, 700, 18);
    let fit = common::fit_family(&data, Family::Compositional, 19)?;
    let api = Api::new(fit, ApiConfig::default())?;
    serve(api, addr, |bound| {
        println!("listening on http://{bound}");
        println!("  GET  /healthz  /events  /athletes  /athletes/{{id}}/profile  /athletes/{{id}}/age-curve");
        println!("  POST /simulate");
    })
}
