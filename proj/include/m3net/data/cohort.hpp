#ifndef M3NET_DATA_COHORT_HPP_
#define M3NET_DATA_COHORT_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace m3net::data {

struct CohortSchema {
    int biomarker_width = 10;
    int image_feature_width = 128;
    int bag_capacity = 5;
};

/// One subject. When present, image_bag always has bag_capacity rows with
/// rows >= num_nodules zeroed.
struct SubjectRecord {
    std::string id;
    int label = 0;  // 0 benign, 1 cancer
    std::optional<Eigen::VectorXd> biomarkers;
    std::optional<Eigen::MatrixXd> image_bag;
    int num_nodules = 0;
    std::optional<std::string> site;

    bool has_image() const { return image_bag.has_value(); }
    bool has_bio() const { return biomarkers.has_value(); }
    bool complete() const { return has_image() && has_bio(); }

    bool operator==(const SubjectRecord&) const = default;
};

using Cohort = std::vector<SubjectRecord>;

struct LoadOptions {
    CohortSchema schema;
    /// Keep subjects with neither modality instead of rejecting them
    /// (prediction lists them as unpredictable).
    bool allow_no_modality = false;
};

/// Parses one JSON-lines record; throws DataError describing the offending field.
SubjectRecord record_from_json(const nlohmann::json& j, const LoadOptions& options = {});
nlohmann::json record_to_json(const SubjectRecord& r);

Cohort read_cohort(std::istream& in, const LoadOptions& options = {}, const std::string& source = "<stream>");
Cohort load_cohort(const std::filesystem::path& path, const LoadOptions& options = {});

void write_cohort(std::ostream& out, const Cohort& cohort);
void save_cohort(const std::filesystem::path& path, const Cohort& cohort);

/// Throws DataError if ids repeat.
void check_unique_ids(const Cohort& cohort);

Cohort select(const Cohort& cohort, const std::vector<std::size_t>& indices);
Cohort complete_only(const Cohort& cohort);

} // namespace m3net::data

#endif // M3NET_DATA_COHORT_HPP_
