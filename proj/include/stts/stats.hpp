#pragma once

#include <vector>

#include "stts/types.hpp"

namespace stts {

// I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

// Upper-tail p-value of an F(df1, df2) statistic.
double f_test_p_value(double F, double df1, double df2);

// Area under the ROC curve of scores for positives vs negatives
// (Mann-Whitney, ties count one half).
double auc(const std::vector<double>& positive, const std::vector<double>& negative);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

double mean(const std::vector<double>& x);
// Sample variance (n - 1 denominator); 0 for fewer than two values.
double sample_variance(const std::vector<double>& x);

}  // namespace stts
