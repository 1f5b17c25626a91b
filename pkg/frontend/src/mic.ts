// Optional microphone loudness: an RMS dBFS estimate computed locally so a
// shout makes a large caption and a whisper a small one. No audio ever
// leaves the browser; only the level accompanies submitted text.

export interface MicMeter {
  /** Latest RMS level in dBFS (<= 0; -Infinity while silent). */
  levelDbfs(): number;
  stop(): void;
}

export async function openMicMeter(): Promise<MicMeter> {
  const stream = await navigator.mediaDevices.getUserMedia({ audio: true });
  const audioCtx = new AudioContext();
  const source = audioCtx.createMediaStreamSource(stream);
  const analyser = audioCtx.createAnalyser();
  analyser.fftSize = 2048;
  source.connect(analyser);
  const buffer = new Float32Array(analyser.fftSize);

  return {
    levelDbfs(): number {
      analyser.getFloatTimeDomainData(buffer);
      let sum = 0;
      for (let i = 0; i < buffer.length; i++) sum += buffer[i] * buffer[i];
      const rms = Math.sqrt(sum / buffer.length);
      if (rms <= 0) return -Infinity;
      return Math.min(0, 20 * Math.log10(rms));
    },
    stop(): void {
      for (const track of stream.getTracks()) track.stop();
      void audioCtx.close();
    },
  };
}
