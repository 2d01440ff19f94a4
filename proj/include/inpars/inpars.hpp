#pragma once

#include "inpars/text.hpp"
#include "inpars/random.hpp"
#include "inpars/error.hpp"
#include "inpars/token_counter.hpp"
#include "inpars/dataset.hpp"
#include "inpars/builtin_templates.hpp"
#include "inpars/prompting.hpp"
#include "inpars/porter_stemmer.hpp"
#include "inpars/analyzer.hpp"
#include "inpars/parallel.hpp"
#include "inpars/retrieval.hpp"
#include "inpars/endpoint.hpp"
#include "inpars/scorer.hpp"
#include "inpars/generation.hpp"
#include "inpars/filtering.hpp"
#include "inpars/triples.hpp"
#include "inpars/run.hpp"
#include "inpars/rerank.hpp"
#include "inpars/evaluation.hpp"
