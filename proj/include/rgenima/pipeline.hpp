#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rgenima/config.hpp"
#include "rgenima/error.hpp"
#include "rgenima/stats.hpp"
#include "rgenima/volume_io.hpp"

namespace rgenima {

/// Process exit status for an error category: 2 parse, 3 config, 4 empty
/// result, 5 missing artifact, 1 anything else.
int exit_code_for(Errc c);

/// Artifact locations under the run directory.
struct RunLayout {
    std::filesystem::path root;

    std::filesystem::path cohort() const { return root / "cohort"; }
    std::filesystem::path qc() const { return root / "qc"; }
    std::filesystem::path patches() const { return root / "patches"; }
    std::filesystem::path dataset() const { return root / "dataset"; }
    std::filesystem::path model() const { return root / "model"; }
    std::filesystem::path eval() const { return root / "eval"; }
    std::filesystem::path attribution() const { return root / "attribution"; }
    std::filesystem::path stability() const { return root / "stability"; }
    std::filesystem::path enrich() const { return root / "enrich"; }
    std::filesystem::path plot() const { return root / "plot"; }
    std::filesystem::path logs() const { return root / "logs"; }
};

void cmd_synth(const RunConfig& c, std::ostream& log);
void cmd_qc(const RunConfig& c, std::ostream& log);
void cmd_dataset(const RunConfig& c, std::ostream& log);
void cmd_train(const RunConfig& c, std::ostream& log);
void cmd_eval(const RunConfig& c, std::ostream& log);
void cmd_attribute(const RunConfig& c, std::ostream& log);
void cmd_stability(const RunConfig& c, std::ostream& log);
void cmd_enrich(const RunConfig& c, std::ostream& log);
void cmd_plotdata(const RunConfig& c, std::ostream& log);

/// Writes the resolved config to logs/<name>.ini, runs the subcommand and
/// maps errors to exit codes (messages go to `err`).
int run_subcommand(const std::string& name, const RunConfig& c, std::ostream& log, std::ostream& err);

const std::vector<std::string>& subcommand_names();

/// Manhattan-style rows for one stage: ROIs in `filter` laid out as blocks in
/// RoiTable order, genes by name inside a block, and the two most stable
/// genes of each ROI flagged.
std::string plot_data_csv(const std::vector<StabilityRecord>& records, Stage stage, const RoiTable& table,
                          const std::vector<std::uint32_t>& filter);

}  // namespace rgenima
