//! Event-study engine measuring how news sentiment moves the stock prices of
//! the mentioned firms and of their suppliers and clients, before and after
//! disclosure.
//!
//! The pipeline is: load inputs ([`registry`], [`market`], [`sentiment`],
//! [`graph`]), build a balanced pre/post panel per (mode, polarity, window)
//! ([`panel`]), fit the sector fixed-effects regression ([`regress`]) and
//! render tables and plot data ([`report`]). [`sim`] generates synthetic
//! inputs with known effects.

pub mod graph;
pub mod ingest;
pub mod market;
pub mod panel;
pub mod pipeline;
pub mod registry;
pub mod regress;
pub mod report;
pub mod sentiment;
pub mod sim;

pub use graph::{NetworkStats, SupplyChainGraph, SupplyChainSnapshot};
pub use ingest::{write_atomic, IngestError, Ingested, RowRejection};
pub use market::{DailySeries, IndexSeries, Period, PriceSeries, SeriesStore, WindowChange};
pub use panel::{
    build_panel, AuditRecord, DataStores, DropReason, Mode, Observation, Panel, PanelSummary,
};
pub use registry::{FirmRecord, FirmRegistry};
pub use regress::{fit, Covariance, DiffTest, FitResult, OlsFit};
pub use sentiment::{NewsEvent, NewsStore, Polarity};
pub use sim::{simulate, SimBundle, SimConfig};

/// Default window grid, in trading days.
pub const DEFAULT_WINDOWS: [u32; 8] = [1, 2, 3, 4, 5, 30, 180, 365];
