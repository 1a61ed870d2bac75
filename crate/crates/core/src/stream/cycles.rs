//! Cycle cost model of the hardware transmitter.

use super::StreamError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleModel {
    pub dct_cycles: u64,
    pub quant_zigzag_cycles: u64,
    /// Observed run-length coding range per block.
    pub rle_cycles: (u64, u64),
    pub blocks_per_packet: u64,
    pub per_block_cycles: u64,
    pub header_cycles: u64,
    pub cycles_per_data_byte: u64,
    pub clock_hz: u64,
}

impl Default for CycleModel {
    fn default() -> Self {
        CycleModel {
            dct_cycles: 150,
            quant_zigzag_cycles: 70,
            rle_cycles: (20, 30),
            blocks_per_packet: 12,
            per_block_cycles: 240,
            header_cycles: 384,
            cycles_per_data_byte: 8,
            clock_hz: 100_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Throughput {
    pub cycles_per_packet: f64,
    pub fps: f64,
}

impl CycleModel {
    pub fn cycles_per_packet(&self, payload_bytes: f64) -> f64 {
        (self.blocks_per_packet * self.per_block_cycles + self.header_cycles) as f64
            + payload_bytes * self.cycles_per_data_byte as f64
    }
}

pub fn estimate_throughput(
    model: &CycleModel,
    mean_payload_bytes: f64,
    packets_per_frame: usize,
) -> Result<Throughput, StreamError> {
    if mean_payload_bytes.is_nan() || mean_payload_bytes <= 0.0 || packets_per_frame == 0 {
        return Err(StreamError::InvalidParameter(format!(
            "payload {mean_payload_bytes} bytes over {packets_per_frame} packets per frame"
        )));
    }
    let cycles = model.cycles_per_packet(mean_payload_bytes);
    Ok(Throughput { cycles_per_packet: cycles, fps: model.clock_hz as f64 / (cycles * packets_per_frame as f64) })
}
