#include "m3net/data/cohort.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "m3net/errors.hpp"

namespace m3net::data {

namespace {

using nlohmann::json;

std::string who(const json& j) {
    if (j.contains("id") && j["id"].is_string()) return "subject '" + j["id"].get<std::string>() + "'";
    return "record";
}

double finite_number(const json& v, const std::string& field, const json& record) {
    if (!v.is_number()) throw DataError(who(record) + ": field '" + field + "' must contain numbers");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw DataError(who(record) + ": field '" + field + "' contains a non-finite value");
    return x;
}

} // namespace

SubjectRecord record_from_json(const json& j, const LoadOptions& options) {
    const CohortSchema& schema = options.schema;
    if (!j.is_object()) throw DataError("record is not a JSON object");

    SubjectRecord r;
    if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
        throw DataError("record: field 'id' must be a non-empty string");
    r.id = j["id"].get<std::string>();

    if (!j.contains("label") || !j["label"].is_number_integer())
        throw DataError(who(j) + ": field 'label' must be 0 or 1");
    r.label = j["label"].get<int>();
    if (r.label != 0 && r.label != 1) throw DataError(who(j) + ": field 'label' must be 0 or 1");

    if (j.contains("biomarkers") && !j["biomarkers"].is_null()) {
        const json& b = j["biomarkers"];
        if (!b.is_array() || static_cast<int>(b.size()) != schema.biomarker_width)
            throw DataError(who(j) + ": field 'biomarkers' must be an array of " +
                            std::to_string(schema.biomarker_width) + " numbers (got " +
                            (b.is_array() ? std::to_string(b.size()) : std::string("non-array")) + ")");
        Eigen::VectorXd v(schema.biomarker_width);
        for (int c = 0; c < schema.biomarker_width; ++c) v(c) = finite_number(b[c], "biomarkers", j);
        r.biomarkers = std::move(v);
    }

    if (j.contains("image_features") && !j["image_features"].is_null()) {
        const json& f = j["image_features"];
        if (!f.is_array() || f.empty() || static_cast<int>(f.size()) > schema.bag_capacity)
            throw DataError(who(j) + ": field 'image_features' must hold 1.." +
                            std::to_string(schema.bag_capacity) + " feature rows");
        if (!j.contains("num_nodules") || !j["num_nodules"].is_number_integer())
            throw DataError(who(j) + ": field 'num_nodules' is required with image_features");
        const int count = j["num_nodules"].get<int>();
        if (count < 1)
            throw DataError(who(j) + ": image bag has no real instances (num_nodules = " +
                            std::to_string(count) + ")");
        if (count > static_cast<int>(f.size()))
            throw DataError(who(j) + ": field 'num_nodules' exceeds the number of image_features rows");

        Eigen::MatrixXd bag = Eigen::MatrixXd::Zero(schema.bag_capacity, schema.image_feature_width);
        for (std::size_t k = 0; k < f.size(); ++k) {
            const json& row = f[k];
            if (!row.is_array() || static_cast<int>(row.size()) != schema.image_feature_width)
                throw DataError(who(j) + ": field 'image_features' row " + std::to_string(k) + " must have " +
                                std::to_string(schema.image_feature_width) + " numbers");
            for (int c = 0; c < schema.image_feature_width; ++c)
                bag(static_cast<Eigen::Index>(k), c) = finite_number(row[c], "image_features", j);
        }
        if (!bag.bottomRows(schema.bag_capacity - count).isZero(0))
            throw DataError(who(j) + ": image_features rows beyond num_nodules must be all-zero padding");
        r.image_bag = std::move(bag);
        r.num_nodules = count;
    } else if (j.contains("num_nodules") && !j["num_nodules"].is_null() && j["num_nodules"] != 0) {
        throw DataError(who(j) + ": field 'num_nodules' given without image_features");
    }

    if (j.contains("site") && !j["site"].is_null()) {
        if (!j["site"].is_string()) throw DataError(who(j) + ": field 'site' must be a string");
        r.site = j["site"].get<std::string>();
    }

    if (!r.has_image() && !r.has_bio() && !options.allow_no_modality)
        throw DataError(who(j) + ": neither biomarkers nor image_features present");
    return r;
}

json record_to_json(const SubjectRecord& r) {
    json j;
    j["id"] = r.id;
    j["label"] = r.label;
    if (r.biomarkers) {
        json b = json::array();
        for (Eigen::Index c = 0; c < r.biomarkers->size(); ++c) b.push_back((*r.biomarkers)(c));
        j["biomarkers"] = std::move(b);
    } else {
        j["biomarkers"] = nullptr;
    }
    if (r.image_bag) {
        json rows = json::array();
        for (int k = 0; k < r.num_nodules; ++k) {
            json row = json::array();
            for (Eigen::Index c = 0; c < r.image_bag->cols(); ++c) row.push_back((*r.image_bag)(k, c));
            rows.push_back(std::move(row));
        }
        j["image_features"] = std::move(rows);
        j["num_nodules"] = r.num_nodules;
    } else {
        j["image_features"] = nullptr;
    }
    if (r.site) j["site"] = *r.site;
    return j;
}

Cohort read_cohort(std::istream& in, const LoadOptions& options, const std::string& source) {
    Cohort cohort;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(source + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        SubjectRecord r;
        try {
            r = record_from_json(j, options);
        } catch (const DataError& e) {
            throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen.insert(r.id).second)
            throw DataError(source + ":" + std::to_string(line_no) + ": duplicate id '" + r.id + "'");
        cohort.push_back(std::move(r));
    }
    return cohort;
}

Cohort load_cohort(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open cohort file '" + path.string() + "'");
    return read_cohort(in, options, path.string());
}

void write_cohort(std::ostream& out, const Cohort& cohort) {
    for (const auto& r : cohort) out << record_to_json(r).dump() << '\n';
}

void save_cohort(const std::filesystem::path& path, const Cohort& cohort) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write cohort file '" + path.string() + "'");
    write_cohort(out, cohort);
}

void check_unique_ids(const Cohort& cohort) {
    std::set<std::string> seen;
    for (const auto& r : cohort)
        if (!seen.insert(r.id).second) throw DataError("duplicate id '" + r.id + "'");
}

Cohort select(const Cohort& cohort, const std::vector<std::size_t>& indices) {
    Cohort out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(cohort.at(i));
    return out;
}

Cohort complete_only(const Cohort& cohort) {
    Cohort out;
    for (const auto& r : cohort)
        if (r.complete()) out.push_back(r);
    return out;
}

} // namespace m3net::data
