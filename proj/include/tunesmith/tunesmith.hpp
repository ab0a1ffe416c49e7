#pragma once

#include "tunesmith/bpe.hpp"
#include "tunesmith/chunking.hpp"
#include "tunesmith/code_units.hpp"
#include "tunesmith/config.hpp"
#include "tunesmith/dataset.hpp"
#include "tunesmith/dataset_io.hpp"
#include "tunesmith/document.hpp"
#include "tunesmith/error.hpp"
#include "tunesmith/estimator.hpp"
#include "tunesmith/llm_client.hpp"
#include "tunesmith/parallel.hpp"
#include "tunesmith/pipeline.hpp"
#include "tunesmith/rake.hpp"
#include "tunesmith/recipes_code.hpp"
#include "tunesmith/recipes_text.hpp"
#include "tunesmith/report.hpp"
