/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/io.hpp
 *
 * Copyright 2026 The shapelift authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef SHAPELIFT_IO_HPP
#define SHAPELIFT_IO_HPP

#include "shapelift/pipelines.hpp"
#include "shapelift/solver.hpp"
#include "shapelift/synthetic.hpp"
#include "shapelift/types.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace shapelift {
namespace io {

using json = nlohmann::json;

/// Thrown on malformed files; the message names the offending file and field.
struct ParseError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

namespace detail {

inline json load_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void save_json(const std::string& path, const json& doc)
{
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open file for writing");
    out << doc.dump(2) << '\n';
}

/// Strict-parse helper: unknown fields are rejected unless nested under "meta".
inline void require_known_keys(const json& doc, const std::set<std::string>& allowed,
                               const std::string& path)
{
    if (!doc.is_object()) throw ParseError(path + ": expected a JSON object");
    for (const auto& item : doc.items())
        if (!allowed.count(item.key()) && item.key() != "meta")
            throw ParseError(path + ": unknown field '" + item.key() + "'");
}

inline json matrix_to_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& doc, Eigen::Index rows, Eigen::Index cols,
                                        const std::string& where)
{
    if (!doc.is_array() || static_cast<Eigen::Index>(doc.size()) != rows)
        throw ParseError(where + ": expected " + std::to_string(rows) + " rows");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = doc[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ParseError(where + ": expected " + std::to_string(cols) + " columns per row");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const json& cell = row[static_cast<std::size_t>(c)];
            if (!cell.is_number()) throw ParseError(where + ": expected numeric entries");
            m(r, c) = cell.get<double>();
        }
    }
    return m;
}

/// Shortest round-trip-exact decimal formatting for CSV cells.
inline std::string format_number(double value)
{
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Problem files: {"p", "landmarks": [[x...],[y...]], "visibility", "truth_shape"?}
// ---------------------------------------------------------------------------

struct Problem
{
    Landmarks2D landmarks;
    std::optional<Shape3D> truth;
    json meta = json::object();
};

inline Problem read_problem(const std::string& path)
{
    const json doc = detail::load_json(path);
    detail::require_known_keys(doc, {"p", "landmarks", "visibility", "truth_shape"}, path);
    if (!doc.contains("p") || !doc["p"].is_number_integer())
        throw ParseError(path + ": missing integer field 'p'");
    const auto p = doc["p"].get<Eigen::Index>();
    if (p < 1) throw ParseError(path + ": 'p' must be >= 1");
    if (!doc.contains("landmarks")) throw ParseError(path + ": missing field 'landmarks'");
    const Eigen::Matrix2Xd pts = detail::matrix_from_json(doc["landmarks"], 2, p, path + ": landmarks");

    VisibilityMask vis = VisibilityMask::Constant(p, true);
    if (doc.contains("visibility")) {
        const json& v = doc["visibility"];
        if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != p)
            throw ParseError(path + ": 'visibility' must list one flag per landmark");
        for (Eigen::Index i = 0; i < p; ++i) {
            if (!v[static_cast<std::size_t>(i)].is_boolean())
                throw ParseError(path + ": 'visibility' entries must be booleans");
            vis[i] = v[static_cast<std::size_t>(i)].get<bool>();
        }
    }

    Problem out;
    try {
        out.landmarks = Landmarks2D(pts, vis);
    } catch (const std::invalid_argument& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (doc.contains("truth_shape"))
        out.truth = Shape3D(detail::matrix_from_json(doc["truth_shape"], 3, p, path + ": truth_shape"));
    if (doc.contains("meta")) out.meta = doc["meta"];
    return out;
}

inline void write_problem(const std::string& path, const Landmarks2D& landmarks,
                          const std::optional<Shape3D>& truth = std::nullopt,
                          const json& meta = json::object())
{
    json doc;
    doc["p"] = landmarks.landmark_count();
    doc["landmarks"] = detail::matrix_to_json(landmarks.points);
    json vis = json::array();
    for (Eigen::Index i = 0; i < landmarks.landmark_count(); ++i)
        vis.push_back(static_cast<bool>(landmarks.visibility[i]));
    doc["visibility"] = std::move(vis);
    if (truth) doc["truth_shape"] = detail::matrix_to_json(truth->points);
    if (!meta.empty()) doc["meta"] = meta;
    detail::save_json(path, doc);
}

// ---------------------------------------------------------------------------
// Shape files (training data): {"p", "shape": [3][p]}
// ---------------------------------------------------------------------------

inline Shape3D read_shape(const std::string& path)
{
    const json doc = detail::load_json(path);
    detail::require_known_keys(doc, {"p", "shape"}, path);
    if (!doc.contains("p") || !doc["p"].is_number_integer())
        throw ParseError(path + ": missing integer field 'p'");
    const auto p = doc["p"].get<Eigen::Index>();
    if (!doc.contains("shape")) throw ParseError(path + ": missing field 'shape'");
    return Shape3D(detail::matrix_from_json(doc["shape"], 3, p, path + ": shape"));
}

inline void write_shape(const std::string& path, const Shape3D& shape)
{
    json doc;
    doc["p"] = shape.landmark_count();
    doc["shape"] = detail::matrix_to_json(shape.points);
    detail::save_json(path, doc);
}

// ---------------------------------------------------------------------------
// Dictionary files: {"k", "p", "bases": [k][3][p], "nonneg", "normalized"}
// ---------------------------------------------------------------------------

inline ShapeDictionary read_dictionary(const std::string& path)
{
    const json doc = detail::load_json(path);
    detail::require_known_keys(doc, {"k", "p", "bases", "nonneg", "normalized"}, path);
    for (const char* field : {"k", "p"})
        if (!doc.contains(field) || !doc[field].is_number_integer())
            throw ParseError(path + ": missing integer field '" + std::string(field) + "'");
    const auto k = doc["k"].get<Eigen::Index>();
    const auto p = doc["p"].get<Eigen::Index>();
    if (!doc.contains("bases") || !doc["bases"].is_array() ||
        static_cast<Eigen::Index>(doc["bases"].size()) != k)
        throw ParseError(path + ": 'bases' must list k basis shapes");

    std::vector<Shape3D> bases;
    bases.reserve(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i)
        bases.emplace_back(detail::matrix_from_json(doc["bases"][static_cast<std::size_t>(i)], 3, p,
                                                    path + ": bases[" + std::to_string(i) + "]"));
    const bool nonneg = doc.value("nonneg", true);
    const bool normalized = doc.value("normalized", false);
    if (normalized)
        for (Eigen::Index i = 0; i < k; ++i)
            if (bases[static_cast<std::size_t>(i)].points.norm() > 1.0 + 1e-9)
                throw ParseError(path + ": bases[" + std::to_string(i) +
                                 "] violates the unit Frobenius bound of a normalized dictionary");
    return ShapeDictionary(std::move(bases), nonneg, normalized);
}

inline void write_dictionary(const std::string& path, const ShapeDictionary& dict)
{
    json doc;
    doc["k"] = dict.basis_count();
    doc["p"] = dict.landmark_count();
    json bases = json::array();
    for (Eigen::Index i = 0; i < dict.basis_count(); ++i)
        bases.push_back(detail::matrix_to_json(dict.basis(i).points));
    doc["bases"] = std::move(bases);
    doc["nonneg"] = dict.nonneg;
    doc["normalized"] = dict.normalized;
    detail::save_json(path, doc);
}

// ---------------------------------------------------------------------------
// Result files
// ---------------------------------------------------------------------------

struct Result
{
    Coefficients coefficients;
    std::optional<Rotation> rotation;               ///< single-rotation pipelines
    std::optional<std::vector<Rotation>> rotations; ///< per-basis pipelines
    Shape3D shape;
    std::optional<Eigen::Matrix2Xd> outliers;
    std::optional<Eigen::Vector2d> translation;
    SolverReport report;
    json meta = json::object();
};

inline void write_result(const std::string& path, const Result& result)
{
    json doc;
    json coeff = json::array();
    for (Eigen::Index i = 0; i < result.coefficients.size(); ++i)
        coeff.push_back(result.coefficients.values[i]);
    doc["coefficients"] = std::move(coeff);
    doc["rotation"] =
        result.rotation ? detail::matrix_to_json(result.rotation->matrix) : json(nullptr);
    if (result.rotations) {
        json rots = json::array();
        for (const Rotation& r : *result.rotations) rots.push_back(detail::matrix_to_json(r.matrix));
        doc["rotations"] = std::move(rots);
    } else {
        doc["rotations"] = nullptr;
    }
    doc["shape"] = detail::matrix_to_json(result.shape.points);
    doc["E"] = result.outliers ? detail::matrix_to_json(*result.outliers) : json(nullptr);
    doc["T"] = result.translation ? json::array({result.translation->x(), result.translation->y()})
                                  : json(nullptr);
    doc["report"] = {{"iterations", result.report.iterations},
                     {"primal_residual", result.report.primal_residual},
                     {"dual_residual", result.report.dual_residual},
                     {"objective", result.report.objective},
                     {"converged", result.report.converged}};
    if (!result.meta.empty()) doc["meta"] = result.meta;
    detail::save_json(path, doc);
}

inline Result read_result(const std::string& path)
{
    const json doc = detail::load_json(path);
    detail::require_known_keys(doc, {"coefficients", "rotation", "rotations", "shape", "E", "T", "report"},
                               path);
    Result out;
    const json& coeff = doc.at("coefficients");
    Eigen::VectorXd c(coeff.size());
    for (std::size_t i = 0; i < coeff.size(); ++i) c[static_cast<Eigen::Index>(i)] = coeff[i].get<double>();
    out.coefficients = Coefficients(std::move(c));

    const json& shape = doc.at("shape");
    const auto p = static_cast<Eigen::Index>(shape.empty() ? 0 : shape[0].size());
    out.shape = Shape3D(detail::matrix_from_json(shape, 3, p, path + ": shape"));

    if (!doc.at("rotation").is_null())
        out.rotation = Rotation(detail::matrix_from_json(doc["rotation"], 3, 3, path + ": rotation"));
    if (!doc.at("rotations").is_null()) {
        std::vector<Rotation> rots;
        for (std::size_t i = 0; i < doc["rotations"].size(); ++i)
            rots.emplace_back(detail::matrix_from_json(doc["rotations"][i], 3, 3,
                                                       path + ": rotations[" + std::to_string(i) + "]"));
        out.rotations = std::move(rots);
    }
    if (!doc.at("E").is_null()) out.outliers = detail::matrix_from_json(doc["E"], 2, p, path + ": E");
    if (!doc.at("T").is_null()) {
        const json& t = doc["T"];
        if (!t.is_array() || t.size() != 2) throw ParseError(path + ": 'T' must hold two numbers");
        out.translation = Eigen::Vector2d(t[0].get<double>(), t[1].get<double>());
    }
    const json& report = doc.at("report");
    out.report.iterations = report.at("iterations").get<int>();
    out.report.primal_residual = report.at("primal_residual").get<double>();
    out.report.dual_residual = report.at("dual_residual").get<double>();
    out.report.objective = report.at("objective").get<double>();
    out.report.converged = report.at("converged").get<bool>();
    if (doc.contains("meta")) out.meta = doc["meta"];
    return out;
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

/// Columns: k,p,z,trials,successes,frequency; rows ordered by (p asc, z asc).
inline void write_phase_grid_csv(const std::string& path, const synth::PhaseGridResult& grid)
{
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open file for writing");
    out << "k,p,z,trials,successes,frequency\n";
    for (std::size_t pi = 0; pi < grid.p_values.size(); ++pi)
        for (std::size_t zi = 0; zi < grid.z_values.size(); ++zi) {
            const double freq = grid.frequency(static_cast<Eigen::Index>(pi),
                                               static_cast<Eigen::Index>(zi));
            const int successes = static_cast<int>(std::lround(freq * grid.trials));
            out << grid.k << ',' << grid.p_values[pi] << ',' << grid.z_values[zi] << ','
                << grid.trials << ',' << successes << ',' << detail::format_number(freq) << '\n';
        }
}

/// Columns: pipeline,instances,mean_error_3d,mean_objective,mean_seconds.
inline void write_compare_csv(const std::string& path, const std::vector<synth::PipelineRow>& rows)
{
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open file for writing");
    out << "pipeline,instances,mean_error_3d,mean_objective,mean_seconds\n";
    for (const auto& row : rows)
        out << row.pipeline << ',' << row.instances << ',' << detail::format_number(row.mean_error_3d)
            << ',' << detail::format_number(row.mean_objective) << ','
            << detail::format_number(row.mean_seconds) << '\n';
}

} // namespace io
} // namespace shapelift

#endif /* SHAPELIFT_IO_HPP */
