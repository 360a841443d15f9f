//! Station data on disk: hourly raw axis files, portable-sensor logs and
//! observatory IAGA-2002 text, plus multi-week catalogs.

mod catalog;
mod iaga;
mod load;
mod raw;
mod stream;
mod vmr;

pub use catalog::{
    compile_pattern, scan_catalog, CatalogEntry, Coverage, DatasetCatalog, FormatTag, DEFAULT_PATTERN,
};
pub use iaga::{read_iaga2002, read_iaga2002_with_header, write_iaga2002, IagaComponent, IagaHeader};
pub use load::load_station_range;
pub use raw::{
    for_each_raw_chunk, import_foreign, meta_path, raw_file_name, read_biomed_hour, read_meta, read_raw,
    samples_per_hour, write_meta, write_raw, ForeignLayout, SampleType, CHUNK_SAMPLES,
};
pub use stream::{stream_station, StreamEvent, StreamSummary};
pub use vmr::{read_vmr_log, read_vmr_log_with, write_vmr_log, DEFAULT_MALFORMED_TOLERANCE};
