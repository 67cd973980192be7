//! Fracture files, VTK output and scenario configuration.

mod config;
mod csv;
mod vtk;

pub use config::{
    parse_config, parse_solver, read_config, side_index, FlowConfig, FractureConfig, FractureSelector, Ini,
    InjectionConfig, MechanicsConfig, OutputConfig, ScenarioConfig, SideSupport, TimeConfig, TransportConfig,
};
pub use csv::{format_exact, read_fractures_csv_2d, read_fractures_csv_3d, write_fractures_csv_2d, write_fractures_csv_3d};
pub use vtk::{check_vtk, grid_to_vtk, vtk_file_name, write_vtk, CellField, VtkSummary, VTK_HEADER};
