#include "stmi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "stmi/errors.hpp"

namespace stmi::metrics {

namespace {

void require_matrix(const Tensor& t, const char* what) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(what) + " features must be {rows, width}, got " +
                             shape_str(t.shape()));
    }
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for write: " + tmp);
        out << content;
        if (!out) throw IoError("write failed: " + tmp);
    }
    fs::rename(tmp, path);
}

std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::vector<double> pairwise_distances(const Tensor& q, const Tensor& g, Distance metric) {
    require_matrix(q, "query");
    require_matrix(g, "gallery");
    if (q.cols() != g.cols()) {
        throw DimensionError("pairwise_distances: widths disagree, " + shape_str(q.shape()) +
                             " vs " + shape_str(g.shape()));
    }
    const std::size_t nq = q.rows(), ng = g.rows(), d = q.cols();
    const double* qp = q.data().data();
    const double* gp = g.data().data();
    std::vector<double> out(nq * ng);

    if (metric == Distance::euclidean) {
        for (std::size_t i = 0; i < nq; ++i) {
            for (std::size_t j = 0; j < ng; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double diff = qp[i * d + k] - gp[j * d + k];
                    s += diff * diff;
                }
                out[i * ng + j] = std::sqrt(s);
            }
        }
        return out;
    }

    auto norms = [d](const double* p, std::size_t rows, const char* what) {
        std::vector<double> n(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += p[i * d + k] * p[i * d + k];
            n[i] = std::sqrt(s);
            if (n[i] <= 1e-12) {
                throw NumericError(std::string("pairwise_distances: zero-norm ") + what +
                                   " row " + std::to_string(i) + " under cosine distance");
            }
        }
        return n;
    };
    const std::vector<double> qn = norms(qp, nq, "query");
    const std::vector<double> gn = norms(gp, ng, "gallery");
    for (std::size_t i = 0; i < nq; ++i) {
        for (std::size_t j = 0; j < ng; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += qp[i * d + k] * gp[j * d + k];
            out[i * ng + j] = 1.0 - dot / (qn[i] * gn[j]);
        }
    }
    return out;
}

double average_precision(const std::vector<int>& ranked_rel) {
    std::size_t relevant = 0;
    for (int r : ranked_rel) {
        if (r != 0 && r != 1) throw ContractError("average_precision: relevance must be 0/1");
        relevant += static_cast<std::size_t>(r);
    }
    if (relevant == 0) throw ContractError("average_precision: no relevant items");
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < ranked_rel.size(); ++k) {
        if (ranked_rel[k] == 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    return sum / static_cast<double>(relevant);
}

EvalResult evaluate(const EvalSet& set, Distance metric) {
    require_matrix(set.query, "query");
    require_matrix(set.gallery, "gallery");
    const std::size_t nq = set.query.rows(), ng = set.gallery.rows();
    if (set.query_labels.size() != nq || set.query_cameras.size() != nq) {
        throw ContractError("evaluate: query label/camera count mismatch");
    }
    if (set.gallery_labels.size() != ng || set.gallery_cameras.size() != ng) {
        throw ContractError("evaluate: gallery label/camera count mismatch");
    }

    const std::vector<double> dist = pairwise_distances(set.query, set.gallery, metric);

    EvalResult result;
    result.ranked.resize(nq);
    double ap_sum = 0.0;
    std::size_t hit1 = 0, hit5 = 0, hit10 = 0;
    for (std::size_t i = 0; i < nq; ++i) {
        std::vector<std::size_t>& kept = result.ranked[i];
        for (std::size_t j = 0; j < ng; ++j) {
            const bool same_id = set.gallery_labels[j] == set.query_labels[i];
            const bool same_cam = set.gallery_cameras[j] == set.query_cameras[i];
            if (same_id && same_cam) continue;
            kept.push_back(j);
        }
        std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
            const double da = dist[i * ng + a], db = dist[i * ng + b];
            return da != db ? da < db : a < b;
        });

        std::vector<int> rel(kept.size());
        std::size_t positives = 0;
        std::size_t first_hit = kept.size();
        for (std::size_t k = 0; k < kept.size(); ++k) {
            rel[k] = set.gallery_labels[kept[k]] == set.query_labels[i] ? 1 : 0;
            positives += static_cast<std::size_t>(rel[k]);
            if (rel[k] == 1 && first_hit == kept.size()) first_hit = k;
        }
        if (positives == 0) {
            throw ContractError("evaluate: query " + std::to_string(i) +
                                " has no valid positive after camera exclusion");
        }
        ap_sum += average_precision(rel);
        hit1 += first_hit < 1;
        hit5 += first_hit < 5;
        hit10 += first_hit < 10;
    }
    result.map = ap_sum / static_cast<double>(nq);
    result.cmc1 = static_cast<double>(hit1) / static_cast<double>(nq);
    result.cmc5 = static_cast<double>(hit5) / static_cast<double>(nq);
    result.cmc10 = static_cast<double>(hit10) / static_cast<double>(nq);
    return result;
}

void write_results(const EvalResult& result, const EvalSet& set, const std::string& path) {
    std::string out;
    out += "map=" + fmt_full(result.map) + "\n";
    out += "cmc1=" + fmt_full(result.cmc1) + "\n";
    out += "cmc5=" + fmt_full(result.cmc5) + "\n";
    out += "cmc10=" + fmt_full(result.cmc10) + "\n";
    out += "queries=" + std::to_string(set.query.rows()) + "\n";
    out += "gallery=" + std::to_string(set.gallery.rows()) + "\n";
    write_atomic(path, out);
}

void write_ranked(const EvalResult& result, const EvalSet& set, const std::string& path) {
    std::string out;
    for (std::size_t i = 0; i < result.ranked.size(); ++i) {
        out += "query=" + std::to_string(i) + " label=" + std::to_string(set.query_labels[i]) +
               " ranked=";
        for (std::size_t k = 0; k < result.ranked[i].size(); ++k) {
            if (k) out += ",";
            out += std::to_string(result.ranked[i][k]);
        }
        out += "\n";
    }
    write_atomic(path, out);
}

} // namespace stmi::metrics
