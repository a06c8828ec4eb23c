//! Run the HTTP service over the embedded reference catalog.
//!
//! ```text
//! cargo run --example serve -- 8642
//! curl -s localhost:8642/api/catalog?level=medium
//! ```

use cuiassess::catalog::Catalog;
use cuiassess::service::{serve, ServiceConfig, SessionStore};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let mut config = ServiceConfig::default();
    if let Some(port) = std::env::args().nth(1) {
        config.port = port.parse().expect("port number");
    }
    println!("listening on http://{}:{}", config.bind, config.port);
    serve(SessionStore::new(Catalog::reference(), None), config).await
}
