"""retinacode: a dense sigmoid autoencoder over a synthetic retina, with the
population-coding analyses, perturbation probes, and learning/forgetting
curriculum used to study it."""

from .dataset import (DEFAULT_GLYPH_SIZE, DEFAULT_RANGES, DEFAULT_RETINA_WIDTH,
                      DigitCorpus, NOVEL_KINDS, PROPERTY_TAGS, PropertyRanges,
                      RetinaImage, StimulusProps, TrialSet, augmented_sampler,
                      fixed_pool_sampler, generate_novel, load_idx,
                      mixed_sampler, novel_sampler, render_centered,
                      render_stimulus, sample_probe_set, sample_trial_set,
                      save_idx, stimuli_to_matrix, synthetic_digit_corpus,
                      translate_image)
from .development import (DevelopmentSnapshot, DevelopmentTracker, FiringStats,
                          SynapseStats, capture_snapshot, detect_ctp_candidates,
                          firing_stats, synapse_stats)
from .network import (ENCODING_DIM, ActivationRecord, Gradients, LayerSpec,
                      MetricLog, NetworkParams, TrainConfig, backward,
                      decode_from_encoding, encode, evaluate_mse, forward,
                      gradient_check, init_params, load_checkpoint,
                      reconstruction_loss, save_checkpoint, train)
from .perturbation import (InvarianceCheck, LesionReport, ModulationSweep,
                           centroid, input_translation_shift, lesion, modulate,
                           position_invariance_check)
from .population import (Embedding2D, FavoriteImages, SimilarityMatrix,
                         StimulusGrid, build_stimulus_grid, favorite_images,
                         paradiagonal_score, silhouette_score,
                         similarity_matrix, top_responsive, tsne_embed)
from .properties import (CorrelationResult, DecoderFit, IdentityClassifier,
                         IdentityCorrelation, LinearDecoder, NeuronCategoryMap,
                         categorize, correlate, fit_identity_classifier,
                         fit_linear_decoder, identity_correlation_matrix,
                         pearson_with_p, perturbation_robustness, top_neuron)
from .curriculum import (CurriculumLog, CurriculumPhase, EvalSummary,
                         PlasticityReport, forgetting_summary,
                         plasticity_compare, run_curriculum)
from . import errors, pgm

__version__ = "0.1.0"
